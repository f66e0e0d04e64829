use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    build_level_block, build_maf, build_marx, extract_factors, lag_block, BlockKind, BlockSet, ColumnKind, ColumnLabel,
    FeatureBlock, FeatureError, MarxAlignment,
};
use crate::date::YearMonth;
use crate::fredmd::Tcode;
use crate::linalg::Standardizer;
use crate::panel::Panel;

/// Lag orders and sizes of the feature blocks. Lag counts follow
/// [`lag_block`]: a value `p` yields the `p + 1` columns `L^0 .. L^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub y_lags: usize,
    pub factors: usize,
    pub factor_lags: usize,
    pub x_lags: usize,
    pub marx_order: usize,
    pub marx_alignment: MarxAlignment,
    pub maf_lags: usize,
    pub maf_count: usize,
    pub level_lags: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            y_lags: 12,
            factors: 8,
            factor_lags: 12,
            x_lags: 11,
            marx_order: 12,
            marx_alignment: MarxAlignment::Current,
            maf_lags: 12,
            maf_count: 2,
            level_lags: 0,
        }
    }
}

/// Blocks built once per estimation window and shared by every featureset.
#[derive(Debug, Clone, Default)]
pub struct BlockCollection {
    pub blocks: Vec<FeatureBlock>,
}

impl BlockCollection {
    pub fn get(&self, kind: BlockKind) -> Option<&FeatureBlock> {
        self.blocks.iter().find(|b| b.kind == ColumnKind::Block(kind))
    }
}

/// Build the requested blocks from a stationary window `x` and the matching
/// raw-level window `levels` (same dates and columns).
pub fn build_blocks(
    cfg: &FeatureConfig,
    x: &Panel,
    levels: &Panel,
    tcodes: &[Tcode],
    needed: BlockSet,
) -> Result<BlockCollection, FeatureError> {
    let mut blocks = Vec::with_capacity(needed.len());
    for kind in needed.kinds() {
        let block = match kind {
            BlockKind::F => {
                let (factors, _) = extract_factors(x, cfg.factors)?;
                let names = factors.labels.iter().map(|l| l.source.clone()).collect();
                let panel = Panel::new(factors.dates, names, factors.values);
                lag_block(&panel, cfg.factor_lags, ColumnKind::Block(BlockKind::F))
            }
            BlockKind::X => lag_block(x, cfg.x_lags, ColumnKind::Block(BlockKind::X)),
            BlockKind::Marx => build_marx(x, cfg.marx_order, cfg.marx_alignment)?,
            BlockKind::Maf => build_maf(x, cfg.maf_lags, cfg.maf_count)?,
            BlockKind::Level => build_level_block(levels, tcodes, cfg.level_lags),
        };
        blocks.push(block);
    }
    Ok(BlockCollection { blocks })
}

/// Dated design matrix: own lags of the target followed by the requested
/// blocks in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub target: String,
    pub blocks: BlockSet,
    pub dates: Vec<YearMonth>,
    pub values: DMatrix<f64>,
    pub labels: Vec<ColumnLabel>,
}

impl FeatureMatrix {
    pub fn n_columns(&self) -> usize {
        self.labels.len()
    }

    pub fn row_complete(&self, i: usize) -> bool {
        self.values.row(i).iter().all(|v| !v.is_nan())
    }

    /// Indices of rows with no missing cell.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.dates.len()).filter(|&i| self.row_complete(i)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.n_columns(), |i, j| self.values[(rows[i], j)])
    }

    /// Standardization statistics over the given training rows.
    pub fn standardizer(&self, rows: &[usize]) -> Standardizer {
        Standardizer::fit(&self.select_rows(rows))
    }

    /// Columnar CSV with three provenance lines (block, source, index) ahead
    /// of the data.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = |first: &str, f: &dyn Fn(&ColumnLabel) -> String| {
            std::iter::once(first.to_string()).chain(self.labels.iter().map(f)).collect::<Vec<_>>()
        };
        w.write_record(header("#block", &|l| l.kind.to_string()))?;
        w.write_record(header("#source", &|l| l.source.clone()))?;
        w.write_record(header("#index", &|l| l.index.to_string()))?;
        w.write_record(header("date", &|l| l.to_string()))?;
        for (i, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.to_string()];
            for v in self.values.row(i).iter() {
                row.push(if v.is_nan() { String::new() } else { v.to_string() });
            }
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Concatenate own lags with the blocks of `set`.
pub fn assemble_feature_matrix(
    target: &str,
    set: BlockSet,
    own_lags: &FeatureBlock,
    blocks: &BlockCollection,
) -> Result<FeatureMatrix, FeatureError> {
    let mut parts: Vec<&FeatureBlock> = vec![own_lags];
    for kind in set.kinds() {
        let block = blocks.get(kind).ok_or(FeatureError::MissingBlock(kind))?;
        if block.dates != own_lags.dates {
            return Err(FeatureError::Misaligned { block: kind.to_string() });
        }
        parts.push(block);
    }
    let t = own_lags.dates.len();
    let width: usize = parts.iter().map(|b| b.n_columns()).sum();
    let mut values = DMatrix::zeros(t, width);
    let mut labels = Vec::with_capacity(width);
    let mut offset = 0;
    for b in parts {
        values.view_mut((0, offset), (t, b.n_columns())).copy_from(&b.values);
        labels.extend(b.labels.iter().cloned());
        offset += b.n_columns();
    }
    Ok(FeatureMatrix { target: target.to_string(), blocks: set, dates: own_lags.dates.clone(), values, labels })
}
