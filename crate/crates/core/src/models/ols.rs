use nalgebra::{DMatrix, DVector};

use super::Learned;
use crate::linalg::{qr_least_squares, ridge_solve};

/// Ridge penalty used when the design is rank deficient.
pub const RANK_FALLBACK_RIDGE: f64 = 1e-8;

/// Least squares with intercept on a centered design. Rank-deficient
/// designs fall back to a tiny ridge and record a warning.
pub fn fit_ols(z: &DMatrix<f64>, y: &[f64], warnings: &mut Vec<String>) -> Learned {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean));
    let beta = match qr_least_squares(z, &centered) {
        Some(b) => b,
        None => {
            warnings.push(format!(
                "design {}x{} is rank deficient, solved with ridge {RANK_FALLBACK_RIDGE:e}",
                z.nrows(),
                z.ncols()
            ));
            ridge_solve(z, &centered, RANK_FALLBACK_RIDGE)
        }
    };
    Learned::Linear { intercept: mean, coefficients: beta.iter().copied().collect() }
}
