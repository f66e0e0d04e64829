use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Evaluation, ParamSet, TuningError, TuningMethod, TuningResult};
use crate::linalg::qr_least_squares;

/// Inputs of one BIC value, stored so the score can be recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicTerms {
    pub ssr: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

/// `T·log(SSR/T) + p·log(T)`.
pub fn bic_score(terms: &BicTerms) -> f64 {
    let t = terms.n_obs as f64;
    t * (terms.ssr / t).ln() + terms.n_params as f64 * t.ln()
}

/// Choose a lag order by BIC. `design(order)` returns the regressors
/// (without intercept) and target for that order; all orders should share
/// the same rows. Rank-deficient orders are recorded with an infinite score.
pub fn select_by_bic<F>(orders: &[usize], design: F) -> Result<TuningResult, TuningError>
where
    F: Fn(usize) -> (DMatrix<f64>, Vec<f64>),
{
    if orders.is_empty() {
        return Err(TuningError::EmptyGrid);
    }
    let mut evaluations = Vec::with_capacity(orders.len());
    for &order in orders {
        let (x, y) = design(order);
        let (t, k) = x.shape();
        let params = ParamSet::new().with("order", order as f64);
        let with_intercept = DMatrix::from_fn(t, k + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let yv = DVector::from_column_slice(&y);
        let fitted = if t > k + 1 { qr_least_squares(&with_intercept, &yv) } else { None };
        let eval = match fitted {
            Some(beta) => {
                let resid = &yv - &with_intercept * beta;
                let terms = BicTerms { ssr: resid.norm_squared(), n_obs: t, n_params: k + 1 };
                Evaluation { bic: Some(terms), ..Evaluation::new(params, bic_score(&terms)) }
            }
            None => Evaluation::new(params, f64::INFINITY),
        };
        evaluations.push(eval);
    }
    if evaluations.iter().all(|e| e.bic.is_none()) {
        return Err(TuningError::AllRankDeficient);
    }
    TuningResult::from_evaluations(TuningMethod::Bic, evaluations)
}
