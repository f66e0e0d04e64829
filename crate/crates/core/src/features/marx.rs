use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BlockKind, ColumnKind, ColumnLabel, FeatureBlock, FeatureError};
use crate::linalg::{ridge_solve, solve_spd};
use crate::panel::{Panel, MISSING};

/// Where each moving average ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarxAlignment {
    /// Averages end at `X_t`, so order 1 equals the current observation.
    #[default]
    Current,
    /// Averages end at `X_{t-1}`.
    Previous,
}

/// Moving averages of order `1..=order` of every series.
///
/// Column `(k, p)` at row `t` is `(1/p) * sum_{j<p} X_{k, t-s-j}` with
/// `s = 0` for [`MarxAlignment::Current`] and `s = 1` for `Previous`.
pub fn build_marx(x: &Panel, order: usize, alignment: MarxAlignment) -> Result<FeatureBlock, FeatureError> {
    if order == 0 {
        return Err(FeatureError::ZeroOrder);
    }
    let shift = match alignment {
        MarxAlignment::Current => 0,
        MarxAlignment::Previous => 1,
    };
    let (t, k) = x.values.shape();
    let mut values = DMatrix::from_element(t, k * order, MISSING);
    let kind = ColumnKind::Block(BlockKind::Marx);
    let mut labels = Vec::with_capacity(k * order);
    for j in 0..k {
        for p in 1..=order {
            labels.push(ColumnLabel::new(kind, x.names[j].clone(), p));
        }
        for row in shift..t {
            let newest = row - shift;
            let mut acc = 0.0;
            for p in 1..=order.min(newest + 1) {
                acc += x.values[(newest + 1 - p, j)];
                values[(row, j * order + p - 1)] = acc / p as f64;
            }
        }
    }
    Ok(FeatureBlock { kind, dates: x.dates.clone(), values, labels })
}

/// The cumulative-sum rotation and its inverse for lag order `P`.
///
/// With lag columns ordered oldest first, `Z = X C` holds the unnormalized
/// moving sums (longest first), and ridge on `Z` is fused ridge on `X` with
/// penalty `β' D'D β`, where `β = C θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrices {
    pub order: usize,
    /// Lower-triangular matrix of ones.
    pub c: DMatrix<f64>,
    /// First-difference operator, `D = C⁻¹`.
    pub d: DMatrix<f64>,
}

impl RotationMatrices {
    pub fn new(order: usize) -> Self {
        let c = DMatrix::from_fn(order, order, |i, j| if i >= j { 1.0 } else { 0.0 });
        let d = DMatrix::from_fn(order, order, |i, j| {
            if i == j {
                1.0
            } else if i == j + 1 {
                -1.0
            } else {
                0.0
            }
        });
        RotationMatrices { order, c, d }
    }

    /// Block-diagonal version for `series` stacked lag groups.
    pub fn block_diagonal(&self, series: usize) -> RotationMatrices {
        let n = self.order * series;
        let mut c = DMatrix::zeros(n, n);
        let mut d = DMatrix::zeros(n, n);
        for s in 0..series {
            let o = s * self.order;
            c.view_mut((o, o), (self.order, self.order)).copy_from(&self.c);
            d.view_mut((o, o), (self.order, self.order)).copy_from(&self.d);
        }
        RotationMatrices { order: n, c, d }
    }
}

/// Ridge on the rotated design `Z = X C`. Returns `(θ, β = C θ)`.
pub fn rotation_ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    rot: &RotationMatrices,
) -> (DVector<f64>, DVector<f64>) {
    let z = x * &rot.c;
    let theta = ridge_solve(&z, y, lambda);
    let beta = &rot.c * &theta;
    (theta, beta)
}

/// Fused ridge `(X'X + λ D'D)⁻¹ X'y`.
pub fn fused_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, rot: &RotationMatrices) -> DVector<f64> {
    let gram = x.tr_mul(x) + rot.d.tr_mul(&rot.d) * lambda;
    solve_spd(gram, &x.tr_mul(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::YearMonth;

    fn series(v: &[f64]) -> Panel {
        let start = YearMonth::new(2000, 1).unwrap();
        Panel::new(
            (0..v.len()).map(|i| start.offset(i as i32)).collect(),
            vec!["s".into()],
            DMatrix::from_column_slice(v.len(), 1, v),
        )
    }

    #[test]
    fn arithmetic_means() {
        let b = build_marx(&series(&[2.0, 4.0, 6.0]), 3, MarxAlignment::Current).unwrap();
        assert_eq!(b.values[(2, 0)], 6.0);
        assert_eq!(b.values[(2, 1)], 5.0);
        assert_eq!(b.values[(2, 2)], 4.0);
        assert!(b.values[(1, 2)].is_nan());
        assert_eq!(b.labels[2].to_string(), "MARX:s:p3");
    }

    #[test]
    fn previous_alignment_shifts_by_one() {
        let b = build_marx(&series(&[2.0, 4.0, 6.0, 8.0]), 2, MarxAlignment::Previous).unwrap();
        assert!(b.values[(0, 0)].is_nan());
        assert_eq!(b.values[(3, 0)], 6.0);
        assert_eq!(b.values[(3, 1)], 5.0);
    }

    #[test]
    fn order_one_is_identity() {
        let p = series(&[1.5, -2.0, 3.25]);
        assert_eq!(build_marx(&p, 1, MarxAlignment::Current).unwrap().values, p.values);
    }

    #[test]
    fn d_inverts_c() {
        for p in 1..8 {
            let r = RotationMatrices::new(p);
            assert_eq!(&r.d * &r.c, DMatrix::identity(p, p));
        }
    }
}
