use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentConfig;
use crate::date::YearMonth;
use crate::features::{BlockKind, BlockSet};
use crate::models::ModelFamily;

/// One (target, horizon, model, featureset) combination.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub target: String,
    pub horizon: usize,
    pub model: ModelFamily,
    pub featureset: BlockSet,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/h{}/{}/{}", self.target, self.horizon, self.model, self.featureset)
    }
}

/// Feature set a family is tied to, if any.
pub fn fixed_featureset(model: ModelFamily) -> Option<BlockSet> {
    match model {
        ModelFamily::Ar => Some(BlockSet::EMPTY),
        ModelFamily::Fm => Some(BlockSet::of(&[BlockKind::F])),
        _ => None,
    }
}

/// Every cell of the experiment, in config order.
pub fn grid(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for target in &cfg.targets {
        for &horizon in &cfg.horizons {
            for &model in &cfg.models {
                let sets = match fixed_featureset(model) {
                    Some(s) => vec![s],
                    None => cfg.featuresets.clone(),
                };
                for featureset in sets {
                    let cell = Cell { target: target.clone(), horizon, model, featureset };
                    if !cells.contains(&cell) {
                        cells.push(cell);
                    }
                }
            }
        }
    }
    cells
}

/// Forecast origins `poos_start..=poos_end`.
pub fn origins(cfg: &ExperimentConfig) -> Vec<YearMonth> {
    YearMonth::range_inclusive(cfg.poos_start, cfg.poos_end).collect()
}

/// Origins at which every cell is retuned: the first origin, then every
/// `refresh_months` after it.
pub fn tuning_dates(cfg: &ExperimentConfig) -> Vec<YearMonth> {
    let mut dates = Vec::new();
    let mut last = None;
    for origin in origins(cfg) {
        if crate::tuning::schedule(origin, last, cfg.tuning.refresh_months) {
            dates.push(origin);
            last = Some(origin);
        }
    }
    dates
}

/// Latest tuning date at or before `origin`.
pub fn tuning_date_for(dates: &[YearMonth], origin: YearMonth) -> Option<YearMonth> {
    dates.iter().rev().find(|d| **d <= origin).copied()
}

/// Seed of one fit or search, a hash of the global seed, the cell and the
/// window end.
pub fn derive_seed(global: u64, cell: &Cell, window_end: YearMonth) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    for part in [
        cell.target.as_str(),
        &cell.horizon.to_string(),
        cell.model.name(),
        &cell.featureset.to_string(),
        &window_end.to_string(),
    ] {
        h.update([0u8]);
        h.update(part.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
