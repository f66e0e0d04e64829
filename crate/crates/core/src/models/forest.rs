use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{grow, Presorted, TreeParams};
use super::Learned;

/// Random forest of CART trees on bootstrap samples.
///
/// Tree `i` draws from its own ChaCha stream `i` under `seed`, so the
/// ensemble is identical regardless of how trees are scheduled.
pub fn fit_random_forest(
    z: &DMatrix<f64>,
    y: &[f64],
    trees: usize,
    min_node: usize,
    mtry: usize,
    seed: u64,
) -> Learned {
    let n = y.len();
    let pre = Presorted::new(z);
    let params = TreeParams { max_depth: None, min_leaf: min_node, mtry };
    let trees = (0..trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            grow(z, y, &counts, &pre, &params, &mut rng)
        })
        .collect();
    Learned::Forest { trees }
}
