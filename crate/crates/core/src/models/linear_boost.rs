use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Learned;

/// `min(cap, ⌊p/3⌋)`, at least one.
pub fn default_features_per_step(p: usize, cap: usize) -> usize {
    (p / 3).min(cap).max(1)
}

/// Componentwise L2 boosting.
///
/// Starts from the training mean. Each step draws `features_per_step`
/// distinct columns (visited in ascending order), regresses the current
/// residual on each one alone without intercept, and moves `shrinkage` of
/// the way along the column with the smallest residual sum of squares. Ties
/// go to the lowest column index.
pub fn fit_linear_boost(
    z: &DMatrix<f64>,
    y: &[f64],
    steps: usize,
    shrinkage: f64,
    features_per_step: usize,
    seed: u64,
) -> Learned {
    let p = z.ncols();
    let intercept = y.iter().sum::<f64>() / y.len() as f64;
    let mut resid: Vec<f64> = y.iter().map(|v| v - intercept).collect();
    let mut coefficients = vec![0.0; p];
    let mut selected = Vec::with_capacity(steps);
    if p == 0 {
        return Learned::Boosting { intercept, coefficients, selected };
    }
    let draws = features_per_step.clamp(1, p);
    let col_sq: Vec<f64> = (0..p).map(|k| z.column(k).norm_squared()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..steps {
        let mut candidates = rand::seq::index::sample(&mut rng, p, draws).into_vec();
        candidates.sort_unstable();
        let rss: f64 = resid.iter().map(|r| r * r).sum();
        let mut best: Option<(usize, f64, f64)> = None;
        for &k in &candidates {
            let (ssr, coef) = if col_sq[k] > 0.0 {
                let zu: f64 = z.column(k).iter().zip(&resid).map(|(a, b)| a * b).sum();
                (rss - zu * zu / col_sq[k], zu / col_sq[k])
            } else {
                (rss, 0.0)
            };
            if best.is_none_or(|(_, s, _)| ssr < s) {
                best = Some((k, ssr, coef));
            }
        }
        let (k, _, coef) = best.expect("at least one candidate");
        let step = shrinkage * coef;
        coefficients[k] += step;
        for (r, zv) in resid.iter_mut().zip(z.column(k).iter()) {
            *r -= step * zv;
        }
        selected.push(k);
    }
    Learned::Boosting { intercept, coefficients, selected }
}
