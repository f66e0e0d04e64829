use serde::{Deserialize, Serialize};

use super::{dm_test, EvalError};

/// Two-sided critical values of the fluctuation test at 5% and 10%, by
/// window fraction `μ`. Rows at tenths are the published values; rows in
/// between are linear interpolations.
pub const GR_TABLE: [(f64, f64, f64); 17] = [
    (0.10, 3.393, 3.170),
    (0.15, 3.286, 3.059),
    (0.20, 3.179, 2.948),
    (0.25, 3.0955, 2.857),
    (0.30, 3.012, 2.766),
    (0.35, 2.951, 2.696),
    (0.40, 2.890, 2.626),
    (0.45, 2.8345, 2.563),
    (0.50, 2.779, 2.500),
    (0.55, 2.7065, 2.428),
    (0.60, 2.634, 2.356),
    (0.65, 2.597, 2.304),
    (0.70, 2.560, 2.252),
    (0.75, 2.4965, 2.191),
    (0.80, 2.433, 2.130),
    (0.85, 2.3405, 2.040),
    (0.90, 2.248, 1.950),
];

/// Critical value for window fraction `mu` (rounded to the nearest 0.05 and
/// clamped to the table) at level 0.05 or 0.10.
pub fn gr_critical_value(mu: f64, level: f64) -> Result<f64, EvalError> {
    let key = ((mu * 20.0).round() / 20.0).clamp(0.10, 0.90);
    let row = GR_TABLE.iter().find(|r| (r.0 - key).abs() < 1e-9).expect("table covers 0.10..0.90");
    if (level - 0.05).abs() < 1e-12 {
        Ok(row.1)
    } else if (level - 0.10).abs() < 1e-12 {
        Ok(row.2)
    } else {
        Err(EvalError::Invalid(format!("no fluctuation critical value at level {level}")))
    }
}

/// Rolling Diebold-Mariano statistics of a loss differential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrPath {
    pub window: usize,
    /// `window / T`.
    pub mu: f64,
    /// Index of the centre date of each window, `end − window / 2`.
    pub centers: Vec<usize>,
    /// Statistic per window; `None` where the window has no variance.
    pub statistics: Vec<Option<f64>>,
    /// Two-sided 10% critical value.
    pub critical_value: f64,
}

/// Fluctuation test path: the Diebold-Mariano statistic (Bartlett lag
/// `h − 1`) of every window of `window` consecutive differentials.
pub fn gr_fluctuation(d: &[f64], window: usize, h: usize) -> Result<GrPath, EvalError> {
    let t = d.len();
    if window < 2 {
        return Err(EvalError::WindowTooShort);
    }
    if window > t {
        return Err(EvalError::WindowTooLong { window, len: t });
    }
    let mu = window as f64 / t as f64;
    let mut centers = Vec::with_capacity(t - window + 1);
    let mut statistics = Vec::with_capacity(t - window + 1);
    for end in window - 1..t {
        let slice = &d[end + 1 - window..=end];
        statistics.push(dm_test(slice, h, false)?.statistic);
        centers.push(end - window / 2);
    }
    Ok(GrPath { window, mu, centers, statistics, critical_value: gr_critical_value(mu, 0.10)? })
}
