use nalgebra::DMatrix;

use super::{BlockKind, ColumnKind, ColumnLabel, FeatureBlock, FeatureError};
use crate::linalg::{Pca, Standardizer};
use crate::panel::{Panel, MISSING};

/// Rows of `panel` with no missing cell.
pub(super) fn complete_rows(panel: &Panel) -> Vec<usize> {
    (0..panel.n_periods()).filter(|&i| panel.values.row(i).iter().all(|v| !v.is_nan())).collect()
}

/// First `k` principal-component factors of the standardized window.
///
/// Rows with any missing cell get `NaN` factors. The returned [`Pca`] holds
/// the loadings on the standardized columns.
pub fn extract_factors(x: &Panel, k: usize) -> Result<(FeatureBlock, Pca), FeatureError> {
    let rows = complete_rows(x);
    if rows.is_empty() {
        return Err(FeatureError::NoCompleteRows);
    }
    let max = rows.len().min(x.n_series());
    if k > max {
        return Err(FeatureError::TooManyComponents { requested: k, max });
    }
    let window = x.select_rows(&rows).values;
    if let Some(&j) = Standardizer::degenerate_columns(&window).first() {
        return Err(FeatureError::ZeroVariance(x.names[j].clone()));
    }
    let z = Standardizer::fit(&window).transform(&window);
    let pca = Pca::fit(&z, k);
    let top = pca.eigenvalues.first().copied().unwrap_or(0.0);
    let rank = pca.eigenvalues.iter().filter(|&&e| e > 1e-10 * top.max(f64::MIN_POSITIVE)).count();
    if k > rank {
        return Err(FeatureError::TooManyComponents { requested: k, max: rank });
    }
    let mut values = DMatrix::from_element(x.n_periods(), k, MISSING);
    for (r, &row) in rows.iter().enumerate() {
        for c in 0..k {
            values[(row, c)] = pca.scores[(r, c)];
        }
    }
    let kind = ColumnKind::Block(BlockKind::F);
    let labels = (0..k).map(|c| ColumnLabel::new(kind, format!("f{}", c + 1), 0)).collect();
    Ok((FeatureBlock { kind, dates: x.dates.clone(), values, labels }, pca))
}
