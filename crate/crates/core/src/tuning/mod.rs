//! Hyperparameter selection: BIC lag choice, K-fold cross-validation,
//! a genetic algorithm, low-discrepancy stochastic search, and the
//! reoptimization schedule.
//!
//! Every search minimizes a score. Candidates are named parameter sets and
//! exact score ties resolve to the smallest penalty (`lambda`, then any
//! `*_lambda`), then the smallest `alpha`, then the remaining values by name.

mod bic;
mod ga;
mod kfold;
mod protocol;
mod schedule;
mod stochastic;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::YearMonth;
use crate::models::ModelError;

pub use bic::{bic_score, select_by_bic, BicTerms};
pub use ga::{ga_optimize, GaConfig};
pub use kfold::{alpha_grid, cv_mse, kfold_adaptive_lasso, kfold_cv, kfold_elastic_net, lambda_grid, Folds, PathGrid};
pub use protocol::{hyperparams_for, order_columns, tune_model, TuningMethod, TuningPolicy};
pub use schedule::schedule;
pub use stochastic::{halton, stochastic_search};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuningError {
    #[error("empty candidate grid")]
    EmptyGrid,
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("fold {fold} would hold {rows} rows; at least 2 required")]
    FoldTooSmall { fold: usize, rows: usize },
    #[error("every candidate design is rank deficient")]
    AllRankDeficient,
    #[error("every candidate failed: {0}")]
    AllFailed(String),
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Named hyperparameter values of one candidate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamSet(BTreeMap<String, f64>);

impl ParamSet {
    pub fn new() -> Self {
        ParamSet(BTreeMap::new())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn tie_key(&self) -> Vec<(u8, &str, f64)> {
        let mut key: Vec<(u8, &str, f64)> = self
            .iter()
            .map(|(k, v)| {
                let rank = if k == "lambda" {
                    0
                } else if k.ends_with("_lambda") {
                    1
                } else if k == "alpha" {
                    2
                } else {
                    3
                };
                (rank, k, v)
            })
            .collect();
        key.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
        key
    }

    /// Deterministic preference between equally scored candidates.
    pub fn tie_cmp(&self, other: &ParamSet) -> Ordering {
        let (a, b) = (self.tie_key(), other.tie_key());
        for (x, y) in a.iter().zip(&b) {
            let ord = x.0.cmp(&y.0).then(x.1.cmp(y.1)).then(x.2.total_cmp(&y.2));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        a.len().cmp(&b.len())
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// One scored candidate. Failed candidates score `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub params: ParamSet,
    #[serde(with = "score_serde")]
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bic: Option<BicTerms>,
}

impl Evaluation {
    pub fn new(params: ParamSet, score: f64) -> Self {
        Evaluation { params, score: if score.is_nan() { f64::INFINITY } else { score }, bic: None }
    }
}

/// Non-finite scores are written as strings so the JSON stays valid.
mod score_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else {
            Repr::Text(if *v > 0.0 { "inf" } else { "-inf" }.to_string()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(_) => Ok(f64::INFINITY),
        }
    }
}

/// Outcome of a search: the chosen candidate and every recorded score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub method: TuningMethod,
    pub chosen: ParamSet,
    #[serde(with = "score_serde")]
    pub score: f64,
    pub evaluations: Vec<Evaluation>,
    /// Last date of the data the search saw, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_end: Option<YearMonth>,
    /// Earlier search stage whose winner fed this one (the adaptive lasso
    /// ridge pilot).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot: Option<Box<TuningResult>>,
}

impl TuningResult {
    /// Pick the minimal score under the tie rule. Errors when nothing
    /// finite was recorded.
    pub fn from_evaluations(method: TuningMethod, evaluations: Vec<Evaluation>) -> Result<Self, TuningError> {
        if evaluations.is_empty() {
            return Err(TuningError::EmptyGrid);
        }
        let best = best_index(&evaluations);
        if evaluations[best].score == f64::INFINITY {
            return Err(TuningError::AllFailed(format!("{} candidates scored +inf", evaluations.len())));
        }
        Ok(TuningResult {
            method,
            chosen: evaluations[best].params.clone(),
            score: evaluations[best].score,
            evaluations,
            window_end: None,
            pilot: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tuning result serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn compare(a: &Evaluation, b: &Evaluation) -> Ordering {
    a.score.total_cmp(&b.score).then_with(|| a.params.tie_cmp(&b.params))
}

fn best_index(evals: &[Evaluation]) -> usize {
    (1..evals.len()).fold(0, |best, i| if compare(&evals[i], &evals[best]) == Ordering::Less { i } else { best })
}

/// How a dimension's gene maps to a parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimScale {
    Linear,
    /// The gene is `log10(value)`.
    Log10,
}

/// A bounded search dimension. Bounds are on the gene scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub scale: DimScale,
    /// Round decoded values to integers.
    pub integer: bool,
}

impl Dimension {
    pub fn linear(name: &str, lo: f64, hi: f64) -> Self {
        Dimension { name: name.to_string(), lo, hi, scale: DimScale::Linear, integer: false }
    }

    pub fn integer(name: &str, lo: f64, hi: f64) -> Self {
        Dimension { integer: true, ..Dimension::linear(name, lo, hi) }
    }

    pub fn log10(name: &str, lo: f64, hi: f64) -> Self {
        Dimension { scale: DimScale::Log10, ..Dimension::linear(name, lo, hi) }
    }

    pub fn decode(&self, gene: f64) -> f64 {
        let v = match self.scale {
            DimScale::Linear => gene,
            DimScale::Log10 => 10f64.powf(gene),
        };
        if self.integer {
            v.round()
        } else {
            v
        }
    }

    pub fn clamp(&self, gene: f64) -> f64 {
        gene.clamp(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Product of bounded dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, TuningError> {
        if dims.is_empty() {
            return Err(TuningError::InvalidSpace("no dimensions".into()));
        }
        for d in &dims {
            if !(d.lo.is_finite() && d.hi.is_finite() && d.lo <= d.hi) {
                return Err(TuningError::InvalidSpace(format!("{}: [{}, {}]", d.name, d.lo, d.hi)));
            }
        }
        Ok(SearchSpace { dims })
    }

    pub fn decode(&self, genes: &[f64]) -> ParamSet {
        let mut p = ParamSet::new();
        for (d, &g) in self.dims.iter().zip(genes) {
            p.insert(&d.name, d.decode(g));
        }
        p
    }
}
