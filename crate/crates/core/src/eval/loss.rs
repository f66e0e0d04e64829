use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::date::YearMonth;
use crate::features::BlockSet;
use crate::harness::{fixed_featureset, ForecastRecord};
use crate::models::ModelFamily;

/// A forecasting specification: model family plus feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpecId {
    pub model: ModelFamily,
    pub featureset: BlockSet,
}

impl SpecId {
    pub fn new(model: ModelFamily, featureset: BlockSet) -> Self {
        SpecId { model, featureset }
    }
}

impl fmt::Display for SpecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if fixed_featureset(self.model) == Some(self.featureset) {
            write!(f, "{}", self.model)
        } else {
            write!(f, "{}/{}", self.model, self.featureset)
        }
    }
}

/// `FM`, `AR`, or `MODEL/FEATURESET` such as `RF/F-X-MARX`.
impl FromStr for SpecId {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EvalError::Invalid(format!("bad specification `{s}`"));
        let (model, set) = match s.split_once(['/', ':']) {
            Some((m, fs)) => (m, Some(fs)),
            None => (s, None),
        };
        let model: ModelFamily = model.parse().map_err(|_| bad())?;
        let featureset = match (set, fixed_featureset(model)) {
            (Some(fs), _) => fs.parse().map_err(|_| bad())?,
            (None, Some(fs)) => fs,
            (None, None) => return Err(bad()),
        };
        Ok(SpecId { model, featureset })
    }
}

/// Forecast errors of several specifications for one target and horizon,
/// aligned on the dates of the realized target.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPanel {
    pub target: String,
    pub horizon: usize,
    /// Dates of the realized values (origin plus horizon).
    pub dates: Vec<YearMonth>,
    pub specs: Vec<SpecId>,
    /// `errors[s][t]` is realized minus forecast.
    pub errors: Vec<Vec<f64>>,
}

impl LossPanel {
    /// Errors of every specification with forecasts for `(target, horizon)`,
    /// restricted to dates where all of them have a realized value.
    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a ForecastRecord>,
        target: &str,
        horizon: usize,
    ) -> Result<Self, EvalError> {
        let mut by_spec: BTreeMap<SpecId, BTreeMap<YearMonth, f64>> = BTreeMap::new();
        for r in records {
            if r.target != target || r.horizon != horizon {
                continue;
            }
            if let (Some(f), Some(y), None) = (r.forecast, r.realized, &r.error) {
                by_spec
                    .entry(SpecId::new(r.model, r.featureset))
                    .or_default()
                    .insert(r.origin.offset(horizon as i32), y - f);
            }
        }
        let mut common: Option<BTreeSet<YearMonth>> = None;
        for errs in by_spec.values() {
            let dates: BTreeSet<YearMonth> = errs.keys().copied().collect();
            common = Some(match common {
                None => dates,
                Some(c) => c.intersection(&dates).copied().collect(),
            });
        }
        let dates: Vec<YearMonth> = common.unwrap_or_default().into_iter().collect();
        if dates.is_empty() {
            return Err(EvalError::Empty);
        }
        let specs: Vec<SpecId> = by_spec.keys().copied().collect();
        let errors = by_spec.values().map(|e| dates.iter().map(|d| e[d]).collect()).collect();
        Ok(LossPanel { target: target.to_string(), horizon, dates, specs, errors })
    }

    pub fn index_of(&self, spec: SpecId) -> Option<usize> {
        self.specs.iter().position(|s| *s == spec)
    }

    pub fn squared(&self, s: usize) -> Vec<f64> {
        self.errors[s].iter().map(|e| e * e).collect()
    }

    /// `e²_a − e²_b` per date.
    pub fn loss_differential(&self, a: usize, b: usize) -> Vec<f64> {
        self.errors[a].iter().zip(&self.errors[b]).map(|(x, y)| x * x - y * y).collect()
    }

    pub fn rmse(&self, s: usize) -> Result<f64, EvalError> {
        rmse(&self.errors[s])
    }
}

/// Root mean squared error.
pub fn rmse(errors: &[f64]) -> Result<f64, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}
