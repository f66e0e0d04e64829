use nalgebra::DMatrix;

use super::{BlockKind, ColumnKind, ColumnLabel, FeatureBlock, FeatureError};
use crate::linalg::{Pca, Standardizer};
use crate::panel::{Panel, MISSING};

struct SeriesFit {
    rows: Vec<usize>,
    pca: Pca,
}

/// PCA of one series' `(lags + 1)`-column lag panel over rows where every
/// lag is observed.
fn fit_series(values: &[f64], name: &str, lags: usize, count: usize) -> Result<SeriesFit, FeatureError> {
    let width = lags + 1;
    let rank_error = || FeatureError::RankDeficient { series: name.to_string(), required: count };
    if count > width {
        return Err(rank_error());
    }
    let rows: Vec<usize> = (lags..values.len()).filter(|&t| (0..width).all(|l| !values[t - l].is_nan())).collect();
    if rows.len() < width.max(count) + 1 {
        return Err(rank_error());
    }
    let panel = DMatrix::from_fn(rows.len(), width, |i, l| values[rows[i] - l]);
    if !Standardizer::degenerate_columns(&panel).is_empty() {
        return Err(rank_error());
    }
    let standardizer = Standardizer::fit(&panel);
    let pca = Pca::fit(&standardizer.transform(&panel), count);
    let top = pca.eigenvalues[0];
    if pca.eigenvalues[count - 1] <= 1e-10 * top.max(f64::MIN_POSITIVE) {
        return Err(rank_error());
    }
    Ok(SeriesFit { rows, pca })
}

/// Moving-average factors: the first `count` principal components of each
/// series' own lag panel `[X_t, L X_t, ..., L^lags X_t]`.
pub fn build_maf(x: &Panel, lags: usize, count: usize) -> Result<FeatureBlock, FeatureError> {
    let (t, k) = x.values.shape();
    let kind = ColumnKind::Block(BlockKind::Maf);
    let mut values = DMatrix::from_element(t, k * count, MISSING);
    let mut labels = Vec::with_capacity(k * count);
    for j in 0..k {
        let series = x.column(j);
        let fit = fit_series(&series, &x.names[j], lags, count)?;
        for (i, &row) in fit.rows.iter().enumerate() {
            for c in 0..count {
                values[(row, j * count + c)] = fit.pca.scores[(i, c)];
            }
        }
        for c in 0..count {
            labels.push(ColumnLabel::new(kind, x.names[j].clone(), c + 1));
        }
    }
    Ok(FeatureBlock { kind, dates: x.dates.clone(), values, labels })
}
