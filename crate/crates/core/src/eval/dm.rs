use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::EvalError;

/// Bartlett-kernel long-run variance of `x` around its mean:
/// `γ₀ + 2 Σ_{j=1..L} (1 − j/(L+1)) γ_j`, autocovariances divided by `T`.
pub fn hac_variance(x: &[f64], lags: usize) -> f64 {
    let n = x.len();
    if n == 0 {
        return f64::NAN;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let gamma = |j: usize| c[j..].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut v = gamma(0);
    for j in 1..=lags.min(n - 1) {
        v += 2.0 * (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma(j);
    }
    v
}

/// Outcome of a Diebold-Mariano test. Positive statistics mean the first
/// model has larger losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub n: usize,
    pub mean: f64,
    /// `None` when the differential has no variance.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    /// The two loss series coincide, so the test is undefined.
    pub identical: bool,
}

/// Diebold-Mariano test on loss differentials `d`, HAC variance with
/// Bartlett lag `h − 1`, two-sided normal p-value. With `harvey` the
/// statistic gets the small-sample correction and a Student-t reference
/// with `T − 1` degrees of freedom.
pub fn dm_test(d: &[f64], h: usize, harvey: bool) -> Result<DmResult, EvalError> {
    let t = d.len();
    if t < 2 {
        return Err(EvalError::Empty);
    }
    let mean = d.iter().sum::<f64>() / t as f64;
    let var = hac_variance(d, h.saturating_sub(1));
    let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(var > 1e-28 * (1.0 + scale * scale)) {
        return Ok(DmResult { n: t, mean, statistic: None, p_value: None, identical: true });
    }
    let mut stat = mean / (var / t as f64).sqrt();
    let p = if harvey {
        let (tf, hf) = (t as f64, h as f64);
        stat *= ((tf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / tf) / tf).sqrt();
        let dist = StudentsT::new(0.0, 1.0, tf - 1.0).expect("valid t distribution");
        2.0 * (1.0 - dist.cdf(stat.abs()))
    } else {
        let dist = Normal::new(0.0, 1.0).expect("standard normal");
        2.0 * (1.0 - dist.cdf(stat.abs()))
    };
    Ok(DmResult { n: t, mean, statistic: Some(stat), p_value: Some(p), identical: false })
}

/// `***`, `**` and `*` for 1%, 5% and 10% significance.
pub fn significance_stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.01 => "***",
        Some(p) if p < 0.05 => "**",
        Some(p) if p < 0.10 => "*",
        _ => "",
    }
}
