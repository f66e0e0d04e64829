//! Elastic net by cyclic coordinate descent.
//!
//! The objective on a standardized design `Z` and standardized target `y` is
//!
//! `Σ (y - Zβ)² + λ Σ_k (α w_k |β_k| + (1 - α) β_k²)`
//!
//! with unit weights unless given. The intercept is recovered from the
//! target mean and never penalized.

use nalgebra::DMatrix;

use super::{Learned, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticNetOptions {
    /// Stop when `max_k |Δβ_k| · ‖z_k‖²` falls below this after a full sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for ElasticNetOptions {
    fn default() -> Self {
        ElasticNetOptions { tolerance: 1e-10, max_sweeps: 100_000 }
    }
}

/// Centering and scaling of the target, so penalties are comparable across
/// series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScale {
    pub mean: f64,
    pub scale: f64,
}

impl TargetScale {
    pub fn fit(y: &[f64]) -> Self {
        let (mean, sd) = crate::linalg::mean_std(y);
        TargetScale { mean, scale: if sd > 0.0 { sd } else { 1.0 } }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.mean) / self.scale).collect()
    }

    /// Linear model on the original target scale from standardized slopes.
    pub fn to_learned(&self, beta: &[f64]) -> Learned {
        Learned::Linear { intercept: self.mean, coefficients: beta.iter().map(|b| b * self.scale).collect() }
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn dot_col(z: &DMatrix<f64>, k: usize, v: &[f64]) -> f64 {
    z.column(k).iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Smallest λ at which every slope is zero, for a target already
/// standardized.
pub fn lambda_max_standardized(z: &DMatrix<f64>, ys: &[f64], alpha: f64, weights: Option<&[f64]>) -> f64 {
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    (0..z.ncols())
        .map(|k| {
            let w = weights.map_or(1.0, |w| w[k]);
            if w == 0.0 {
                0.0
            } else {
                2.0 * dot_col(z, k, ys).abs() / (alpha * w)
            }
        })
        .fold(0.0, f64::max)
}

/// `λ_max` for a raw target (standardized internally, as in the fit).
pub fn lambda_max(z: &DMatrix<f64>, y: &[f64], alpha: f64) -> f64 {
    let ys = TargetScale::fit(y).apply(y);
    lambda_max_standardized(z, &ys, alpha, None)
}

/// Largest violation of the optimality conditions at `beta`.
pub fn kkt_violation(
    z: &DMatrix<f64>,
    ys: &[f64],
    beta: &[f64],
    alpha: f64,
    lambda: f64,
    weights: Option<&[f64]>,
) -> f64 {
    let fitted = z * nalgebra::DVector::from_column_slice(beta);
    let resid: Vec<f64> = ys.iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    (0..z.ncols())
        .map(|k| {
            let w = weights.map_or(1.0, |w| w[k]);
            let grad = -2.0 * dot_col(z, k, &resid) + 2.0 * lambda * (1.0 - alpha) * beta[k];
            let l1 = lambda * alpha * w;
            if beta[k] != 0.0 {
                (grad + l1 * beta[k].signum()).abs()
            } else {
                (grad.abs() - l1).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Coordinate descent on a standardized problem. `warm` seeds the solution.
pub fn solve_standardized(
    z: &DMatrix<f64>,
    ys: &[f64],
    alpha: f64,
    lambda: f64,
    weights: Option<&[f64]>,
    warm: Option<&[f64]>,
    opts: &ElasticNetOptions,
) -> Result<Vec<f64>, ModelError> {
    let p = z.ncols();
    let col_sq: Vec<f64> = (0..p).map(|k| z.column(k).norm_squared()).collect();
    let mut beta = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut resid = ys.to_vec();
    for (k, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (r, zv) in resid.iter_mut().zip(z.column(k).iter()) {
                *r -= b * zv;
            }
        }
    }
    let ridge = lambda * (1.0 - alpha);
    let update = |k: usize, beta: &mut [f64], resid: &mut [f64]| -> f64 {
        let denom = col_sq[k] + ridge;
        if denom == 0.0 {
            return 0.0;
        }
        let w = weights.map_or(1.0, |w| w[k]);
        let rho = dot_col(z, k, resid) + col_sq[k] * beta[k];
        let new = soft_threshold(rho, lambda * alpha * w / 2.0) / denom;
        let delta = new - beta[k];
        if delta != 0.0 {
            for (r, zv) in resid.iter_mut().zip(z.column(k).iter()) {
                *r -= delta * zv;
            }
            beta[k] = new;
        }
        delta.abs() * col_sq[k]
    };
    let mut sweeps = 0;
    loop {
        // full sweep over every coordinate
        let mut change = 0.0f64;
        for k in 0..p {
            change = change.max(update(k, &mut beta, &mut resid));
        }
        sweeps += 1;
        if change < opts.tolerance {
            return Ok(beta);
        }
        // iterate on the active set until it settles
        loop {
            if sweeps >= opts.max_sweeps {
                let gap = kkt_violation(z, ys, &beta, alpha, lambda, weights);
                return Err(ModelError::NonConvergence { sweeps, gap });
            }
            let active: Vec<usize> = (0..p).filter(|&k| beta[k] != 0.0).collect();
            let mut change = 0.0f64;
            for &k in &active {
                change = change.max(update(k, &mut beta, &mut resid));
            }
            sweeps += 1;
            if change < opts.tolerance {
                break;
            }
        }
    }
}

/// Elastic net fit returning a linear model on the standardized design.
pub fn fit_elastic_net(
    z: &DMatrix<f64>,
    y: &[f64],
    alpha: f64,
    lambda: f64,
    opts: &ElasticNetOptions,
) -> Result<Learned, ModelError> {
    let scale = TargetScale::fit(y);
    let beta = solve_standardized(z, &scale.apply(y), alpha, lambda, None, None, opts)?;
    Ok(scale.to_learned(&beta))
}

/// Warm-started fits along a λ path (any order; descending is fastest).
pub fn elastic_net_path(
    z: &DMatrix<f64>,
    y: &[f64],
    alpha: f64,
    lambdas: &[f64],
    opts: &ElasticNetOptions,
) -> Result<Vec<Learned>, ModelError> {
    let scale = TargetScale::fit(y);
    let ys = scale.apply(y);
    let mut warm: Option<Vec<f64>> = None;
    lambdas
        .iter()
        .map(|&lambda| {
            let beta = solve_standardized(z, &ys, alpha, lambda, None, warm.as_deref(), opts)?;
            let learned = scale.to_learned(&beta);
            warm = Some(beta);
            Ok(learned)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Standardizer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
        let z = Standardizer::fit(&x).transform(&x);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * z[(i, 0)] - z[(i, 1)] + rng.random::<f64>() - 0.5).collect();
        (z, y)
    }

    #[test]
    fn large_lambda_zeroes_everything() {
        let (z, y) = instance(60, 5, 1);
        let lmax = lambda_max(&z, &y, 1.0);
        let fit = fit_elastic_net(&z, &y, 1.0, lmax, &ElasticNetOptions::default()).unwrap();
        let Learned::Linear { coefficients, .. } = fit else { unreachable!() };
        assert!(coefficients.iter().all(|b| *b == 0.0));
        let below = fit_elastic_net(&z, &y, 1.0, lmax * 0.99, &ElasticNetOptions::default()).unwrap();
        let Learned::Linear { coefficients, .. } = below else { unreachable!() };
        assert!(coefficients.iter().any(|b| *b != 0.0));
    }

    #[test]
    fn path_matches_cold_starts() {
        let (z, y) = instance(80, 6, 2);
        let lmax = lambda_max(&z, &y, 0.5);
        let lambdas: Vec<f64> = (0..10).map(|i| lmax * 0.5f64.powi(i)).collect();
        let path = elastic_net_path(&z, &y, 0.5, &lambdas, &ElasticNetOptions::default()).unwrap();
        for (l, warm) in lambdas.iter().zip(&path) {
            let cold = fit_elastic_net(&z, &y, 0.5, *l, &ElasticNetOptions::default()).unwrap();
            let (Learned::Linear { coefficients: a, .. }, Learned::Linear { coefficients: b, .. }) = (&cold, warm)
            else {
                unreachable!()
            };
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sweep_budget_exhaustion_reports_gap() {
        let (z, y) = instance(50, 8, 3);
        let ys = TargetScale::fit(&y).apply(&y);
        let opts = ElasticNetOptions { tolerance: 0.0, max_sweeps: 3 };
        match solve_standardized(&z, &ys, 0.5, 0.1, None, None, &opts) {
            Err(ModelError::NonConvergence { sweeps, gap }) => {
                assert_eq!(sweeps, 3);
                assert!(gap.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
