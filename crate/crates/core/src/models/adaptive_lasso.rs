use nalgebra::{DMatrix, DVector};

use super::elastic_net::{solve_standardized, ElasticNetOptions, TargetScale};
use super::{Learned, ModelError};
use crate::linalg::ridge_solve;

/// Stage-1 coefficients below this magnitude get an infinite weight.
pub const EXCLUSION_THRESHOLD: f64 = 1e-12;

/// Two-stage adaptive lasso with `γ = 1`: a ridge pilot `β̂`, then a lasso on
/// columns scaled by `|β̂_k|`, mapped back to the original columns.
pub fn fit_adaptive_lasso(
    z: &DMatrix<f64>,
    y: &[f64],
    ridge_lambda: f64,
    lasso_lambda: f64,
    warnings: &mut Vec<String>,
) -> Result<Learned, ModelError> {
    let scale = TargetScale::fit(y);
    let ys = scale.apply(y);
    let beta = adaptive_lasso_standardized(z, &ys, ridge_lambda, lasso_lambda, warnings)?;
    Ok(scale.to_learned(&beta))
}

/// Adaptive lasso on an already standardized target.
pub fn adaptive_lasso_standardized(
    z: &DMatrix<f64>,
    ys: &[f64],
    ridge_lambda: f64,
    lasso_lambda: f64,
    warnings: &mut Vec<String>,
) -> Result<Vec<f64>, ModelError> {
    let pilot = ridge_solve(z, &DVector::from_column_slice(ys), ridge_lambda);
    let kept: Vec<usize> = (0..z.ncols()).filter(|&k| pilot[k].abs() >= EXCLUSION_THRESHOLD).collect();
    if kept.len() < z.ncols() {
        warnings.push(format!("{} columns excluded by a zero ridge pilot", z.ncols() - kept.len()));
    }
    let scaled = DMatrix::from_fn(z.nrows(), kept.len(), |i, j| z[(i, kept[j])] * pilot[kept[j]].abs());
    let theta = solve_standardized(&scaled, ys, 1.0, lasso_lambda, None, None, &ElasticNetOptions::default())?;
    let mut beta = vec![0.0; z.ncols()];
    for (j, &k) in kept.iter().enumerate() {
        beta[k] = theta[j] * pilot[k].abs();
    }
    Ok(beta)
}
