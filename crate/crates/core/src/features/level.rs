use super::{lag_block, BlockKind, ColumnKind, FeatureBlock};
use crate::fredmd::Tcode;
use crate::panel::Panel;

/// Lags `0..=p` of raw levels, using log-levels for series whose tcode takes
/// logs.
pub fn build_level_block(levels: &Panel, tcodes: &[Tcode], p: usize) -> FeatureBlock {
    assert_eq!(levels.n_series(), tcodes.len(), "one tcode per series");
    let mut transformed = levels.clone();
    for (j, tcode) in tcodes.iter().enumerate() {
        if tcode.requires_positive() {
            transformed.values.column_mut(j).apply(|v| *v = v.ln());
        }
    }
    lag_block(&transformed, p, ColumnKind::Block(BlockKind::Level))
}
