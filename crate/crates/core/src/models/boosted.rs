use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{grow, Presorted, TreeParams};
use super::Learned;

/// Gradient boosting of regression trees under squared loss.
///
/// Starts at the training mean; each step fits a tree on the current
/// residuals with every feature eligible at every split and adds `shrinkage`
/// times its prediction. `train_loss[m]` is the mean squared training error
/// after `m` steps.
pub fn fit_boosted_trees(
    z: &DMatrix<f64>,
    y: &[f64],
    steps: usize,
    shrinkage: f64,
    max_depth: usize,
    min_leaf: usize,
) -> Learned {
    let (n, p) = z.shape();
    let init = y.iter().sum::<f64>() / n as f64;
    let mut fitted = vec![init; n];
    let pre = Presorted::new(z);
    let params = TreeParams { max_depth: Some(max_depth), min_leaf, mtry: p };
    let weights = vec![1u32; n];
    // unused with mtry = p, required by the tree builder
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| z.row(i).iter().copied().collect()).collect();
    let loss = |fitted: &[f64]| y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
    let mut train_loss = vec![loss(&fitted)];
    let mut trees = Vec::with_capacity(steps);
    for _ in 0..steps {
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let tree = grow(z, &resid, &weights, &pre, &params, &mut rng);
        for (f, row) in fitted.iter_mut().zip(&rows) {
            *f += shrinkage * tree.predict(row);
        }
        train_loss.push(loss(&fitted));
        trees.push(tree);
    }
    Learned::BoostedTrees { init, shrinkage, trees, train_loss }
}
