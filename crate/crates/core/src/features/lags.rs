use nalgebra::DMatrix;

use super::{ColumnKind, ColumnLabel, FeatureBlock};
use crate::panel::{Panel, MISSING};

/// `[v, Lv, ..., L^p v]` for every column `v` of `panel`, grouped by column.
///
/// Row `t` of a lag reaching before the sample start is `NaN`.
pub fn lag_block(panel: &Panel, p: usize, kind: ColumnKind) -> FeatureBlock {
    let (t, k) = panel.values.shape();
    let mut values = DMatrix::from_element(t, k * (p + 1), MISSING);
    let mut labels = Vec::with_capacity(k * (p + 1));
    for j in 0..k {
        for lag in 0..=p {
            let col = j * (p + 1) + lag;
            for row in lag..t {
                values[(row, col)] = panel.values[(row - lag, j)];
            }
            labels.push(ColumnLabel::new(kind, panel.names[j].clone(), lag));
        }
    }
    FeatureBlock { kind, dates: panel.dates.clone(), values, labels }
}
