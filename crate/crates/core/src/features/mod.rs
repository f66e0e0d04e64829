//! Feature blocks and their combinations.
//!
//! Every block is a dated matrix aligned with the input window. Rows that
//! cannot be formed (a lag or average reaching before the window start, or a
//! missing input) are `NaN` and are dropped later when the design matrix is
//! cut down to complete training rows.

mod blockset;
mod factors;
mod lags;
mod level;
mod maf;
mod marx;
mod matrix;

pub use blockset::{BlockKind, BlockSet, BlockSetError, DEFAULT_FEATURESETS};
pub use factors::extract_factors;
pub use lags::lag_block;
pub use level::build_level_block;
pub use maf::build_maf;
pub use marx::{build_marx, fused_ridge, rotation_ridge, MarxAlignment, RotationMatrices};
pub use matrix::{assemble_feature_matrix, build_blocks, BlockCollection, FeatureConfig, FeatureMatrix};

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::YearMonth;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("requested {requested} components but the window supports at most {max}")]
    TooManyComponents { requested: usize, max: usize },
    #[error("series {0} has zero variance in the window")]
    ZeroVariance(String),
    #[error("series {series}: lag panel has rank below {required}")]
    RankDeficient { series: String, required: usize },
    #[error("window has no complete rows")]
    NoCompleteRows,
    #[error("block {block} dates do not match the own-lag block")]
    Misaligned { block: String },
    #[error("block {0} requested but not built")]
    MissingBlock(BlockKind),
    #[error("order must be at least 1")]
    ZeroOrder,
}

/// Which part of the design a column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnKind {
    /// Lags of the forecast target itself.
    OwnLag,
    Block(BlockKind),
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::OwnLag => f.write_str("y"),
            ColumnKind::Block(b) => write!(f, "{b}"),
        }
    }
}

/// Provenance of one design column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnLabel {
    pub kind: ColumnKind,
    /// Source series mnemonic, or factor name for factor columns.
    pub source: String,
    /// Lag for lag-type columns, averaging order for MARX, component number
    /// for MAF.
    pub index: usize,
}

impl ColumnLabel {
    pub fn new(kind: ColumnKind, source: impl Into<String>, index: usize) -> Self {
        ColumnLabel { kind, source: source.into(), index }
    }

    fn index_tag(&self) -> &'static str {
        match self.kind {
            ColumnKind::Block(BlockKind::Marx) => "p",
            ColumnKind::Block(BlockKind::Maf) => "m",
            _ => "L",
        }
    }
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}{}", self.kind, self.source, self.index_tag(), self.index)
    }
}

/// A dated block of feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub kind: ColumnKind,
    pub dates: Vec<YearMonth>,
    pub values: DMatrix<f64>,
    pub labels: Vec<ColumnLabel>,
}

impl FeatureBlock {
    pub fn n_columns(&self) -> usize {
        self.labels.len()
    }

    /// True when row `i` has no missing cell.
    pub fn row_complete(&self, i: usize) -> bool {
        self.values.row(i).iter().all(|v| !v.is_nan())
    }
}
