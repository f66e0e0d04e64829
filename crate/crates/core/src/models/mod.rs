//! Forecasting model families behind one fit/predict contract.
//!
//! Every family is fit on a design standardized with training statistics.
//! The fitted state keeps those statistics and the column labels, so
//! prediction validates the incoming schema and applies the same scaling.

mod adaptive_lasso;
mod boosted;
pub mod elastic_net;
mod forest;
mod linear_boost;
mod ols;
mod tree;

pub use adaptive_lasso::{adaptive_lasso_standardized, fit_adaptive_lasso, EXCLUSION_THRESHOLD};
pub use boosted::fit_boosted_trees;
pub use elastic_net::{
    elastic_net_path, fit_elastic_net, kkt_violation, lambda_max, solve_standardized, ElasticNetOptions, TargetScale,
};
pub use forest::fit_random_forest;
pub use linear_boost::{default_features_per_step, fit_linear_boost};
pub use ols::fit_ols;
pub use tree::{RegressionTree, TreeParams};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Standardizer;

/// Version tag of the serialized [`FittedModel`] layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFamily {
    /// Autoregression on own lags, OLS.
    #[serde(rename = "AR")]
    Ar,
    /// Diffusion-index factor model, OLS.
    #[serde(rename = "FM")]
    Fm,
    /// Elastic net.
    #[serde(rename = "EN")]
    En,
    /// Adaptive lasso.
    #[serde(rename = "AL")]
    Al,
    /// Componentwise linear L2 boosting.
    #[serde(rename = "LB")]
    Lb,
    /// Random forest.
    #[serde(rename = "RF")]
    Rf,
    /// Gradient-boosted regression trees.
    #[serde(rename = "BT")]
    Bt,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 7] = [
        ModelFamily::Ar,
        ModelFamily::Fm,
        ModelFamily::En,
        ModelFamily::Al,
        ModelFamily::Lb,
        ModelFamily::Rf,
        ModelFamily::Bt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Ar => "AR",
            ModelFamily::Fm => "FM",
            ModelFamily::En => "EN",
            ModelFamily::Al => "AL",
            ModelFamily::Lb => "LB",
            ModelFamily::Rf => "RF",
            ModelFamily::Bt => "BT",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown model family `{0}`")]
pub struct UnknownFamily(pub String);

impl FromStr for ModelFamily {
    type Err = UnknownFamily;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownFamily(s.to_string()))
    }
}

/// Family-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparams {
    Ols,
    ElasticNet { alpha: f64, lambda: f64 },
    AdaptiveLasso { ridge_lambda: f64, lasso_lambda: f64 },
    LinearBoost { steps: usize, shrinkage: f64, features_per_step: usize },
    RandomForest { trees: usize, min_node: usize, mtry: usize },
    BoostedTrees { steps: usize, shrinkage: f64, max_depth: usize, min_leaf: usize },
}

/// A model family plus its hyperparameters and RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub params: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name: &str, value: f64| Err(ModelError::InvalidHyperparameter { name: name.to_string(), value });
        match self.params {
            Hyperparams::Ols => Ok(()),
            Hyperparams::ElasticNet { alpha, lambda } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return bad("alpha", alpha);
                }
                if !(lambda >= 0.0) {
                    return bad("lambda", lambda);
                }
                Ok(())
            }
            Hyperparams::AdaptiveLasso { ridge_lambda, lasso_lambda } => {
                if !(ridge_lambda >= 0.0) {
                    return bad("ridge_lambda", ridge_lambda);
                }
                if !(lasso_lambda >= 0.0) {
                    return bad("lasso_lambda", lasso_lambda);
                }
                Ok(())
            }
            Hyperparams::LinearBoost { steps, shrinkage, features_per_step } => {
                if steps > 500 {
                    return bad("steps", steps as f64);
                }
                if !(0.0..=1.0).contains(&shrinkage) {
                    return bad("shrinkage", shrinkage);
                }
                if features_per_step == 0 {
                    return bad("features_per_step", 0.0);
                }
                Ok(())
            }
            Hyperparams::RandomForest { trees, min_node, mtry } => {
                if trees == 0 {
                    return bad("trees", 0.0);
                }
                if min_node == 0 {
                    return bad("min_node", 0.0);
                }
                if mtry == 0 {
                    return bad("mtry", 0.0);
                }
                Ok(())
            }
            Hyperparams::BoostedTrees { steps, shrinkage, max_depth, min_leaf } => {
                if steps > 500 {
                    return bad("steps", steps as f64);
                }
                if !(0.0..=1.0).contains(&shrinkage) {
                    return bad("shrinkage", shrinkage);
                }
                if max_depth == 0 {
                    return bad("max_depth", 0.0);
                }
                if min_leaf == 0 {
                    return bad("min_leaf", 0.0);
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("hyperparameter {name} = {value} out of range")]
    InvalidHyperparameter { name: String, value: f64 },
    #[error("no training rows")]
    Empty,
    #[error("design has {rows} rows but target has {targets}")]
    DimensionMismatch { rows: usize, targets: usize },
    #[error("elastic net did not converge after {sweeps} sweeps (max KKT violation {gap:.3e})")]
    NonConvergence { sweeps: usize, gap: f64 },
    #[error("column schema mismatch: missing [{}], unexpected [{}]", missing.join(", "), unexpected.join(", "))]
    Schema { missing: Vec<String>, unexpected: Vec<String> },
    #[error("prediction input has {found} values per row, expected {expected}")]
    Width { expected: usize, found: usize },
    #[error("hyperparameters {params:?} do not apply to family {family}")]
    FamilyMismatch { family: ModelFamily, params: Hyperparams },
    #[error("fitted model format version {0} is not supported")]
    Version(u32),
}

/// Learned parameters, on the standardized design scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    /// `ŷ = intercept + coefficients · z`.
    Linear { intercept: f64, coefficients: Vec<f64> },
    /// Linear boosting keeps the aggregated coefficients and the selected
    /// feature sequence.
    Boosting { intercept: f64, coefficients: Vec<f64>, selected: Vec<usize> },
    /// Mean over trees.
    Forest { trees: Vec<RegressionTree> },
    /// `init + shrinkage * Σ tree(z)`.
    BoostedTrees { init: f64, shrinkage: f64, trees: Vec<RegressionTree>, train_loss: Vec<f64> },
}

/// A trained predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub family: ModelFamily,
    pub params: Hyperparams,
    pub columns: Vec<String>,
    pub standardizer: Standardizer,
    pub learned: Learned,
    pub n_train: usize,
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fitted models serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Coefficients of linear families on the standardized scale.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.learned {
            Learned::Linear { coefficients, .. } | Learned::Boosting { coefficients, .. } => Some(coefficients),
            _ => None,
        }
    }

    fn predict_standardized(&self, z: &[f64]) -> f64 {
        match &self.learned {
            Learned::Linear { intercept, coefficients } | Learned::Boosting { intercept, coefficients, .. } => {
                intercept + coefficients.iter().zip(z).map(|(b, v)| b * v).sum::<f64>()
            }
            Learned::Forest { trees } => trees.iter().map(|t| t.predict(z)).sum::<f64>() / trees.len() as f64,
            Learned::BoostedTrees { init, shrinkage, trees, .. } => {
                init + shrinkage * trees.iter().map(|t| t.predict(z)).sum::<f64>()
            }
        }
    }

    /// Map incoming column names onto training positions.
    fn column_map(&self, columns: &[String]) -> Result<Vec<usize>, ModelError> {
        if columns == self.columns.as_slice() {
            return Ok((0..columns.len()).collect());
        }
        let missing: Vec<String> = self.columns.iter().filter(|c| !columns.contains(c)).cloned().collect();
        let unexpected: Vec<String> = columns.iter().filter(|c| !self.columns.contains(c)).cloned().collect();
        if !missing.is_empty() || !unexpected.is_empty() || columns.len() != self.columns.len() {
            return Err(ModelError::Schema { missing, unexpected });
        }
        Ok(self.columns.iter().map(|c| columns.iter().position(|x| x == c).unwrap()).collect())
    }

    /// Predict every row of `x`, whose columns are named by `columns`. Columns
    /// may arrive in any order as long as the set matches training.
    pub fn predict(&self, columns: &[String], x: &DMatrix<f64>) -> Result<Vec<f64>, ModelError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Version(self.format_version));
        }
        if x.ncols() != columns.len() {
            return Err(ModelError::Width { expected: columns.len(), found: x.ncols() });
        }
        let map = self.column_map(columns)?;
        let mut row = vec![0.0; map.len()];
        Ok((0..x.nrows())
            .map(|i| {
                for (k, &src) in map.iter().enumerate() {
                    row[k] = x[(i, src)];
                }
                self.predict_standardized(&self.standardizer.transform_row(&row))
            })
            .collect())
    }

    pub fn predict_row(&self, columns: &[String], row: &[f64]) -> Result<f64, ModelError> {
        let x = DMatrix::from_row_slice(1, row.len(), row);
        Ok(self.predict(columns, &x)?[0])
    }
}

/// Fit `spec` on design `x` with named `columns` and target `y`.
pub fn fit(spec: &ModelSpec, columns: &[String], x: &DMatrix<f64>, y: &[f64]) -> Result<FittedModel, ModelError> {
    spec.validate()?;
    if x.nrows() == 0 {
        return Err(ModelError::Empty);
    }
    if x.nrows() != y.len() {
        return Err(ModelError::DimensionMismatch { rows: x.nrows(), targets: y.len() });
    }
    if x.ncols() != columns.len() {
        return Err(ModelError::Width { expected: columns.len(), found: x.ncols() });
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let mut warnings = Vec::new();
    let mismatch = || ModelError::FamilyMismatch { family: spec.family, params: spec.params.clone() };
    let learned = match (spec.family, &spec.params) {
        (ModelFamily::Ar | ModelFamily::Fm, Hyperparams::Ols) => fit_ols(&z, y, &mut warnings),
        (ModelFamily::En, &Hyperparams::ElasticNet { alpha, lambda }) => {
            fit_elastic_net(&z, y, alpha, lambda, &ElasticNetOptions::default())?
        }
        (ModelFamily::Al, &Hyperparams::AdaptiveLasso { ridge_lambda, lasso_lambda }) => {
            fit_adaptive_lasso(&z, y, ridge_lambda, lasso_lambda, &mut warnings)?
        }
        (ModelFamily::Lb, &Hyperparams::LinearBoost { steps, shrinkage, features_per_step }) => {
            fit_linear_boost(&z, y, steps, shrinkage, features_per_step, spec.seed)
        }
        (ModelFamily::Rf, &Hyperparams::RandomForest { trees, min_node, mtry }) => {
            fit_random_forest(&z, y, trees, min_node, mtry, spec.seed)
        }
        (ModelFamily::Bt, &Hyperparams::BoostedTrees { steps, shrinkage, max_depth, min_leaf }) => {
            fit_boosted_trees(&z, y, steps, shrinkage, max_depth, min_leaf)
        }
        _ => return Err(mismatch()),
    };
    for w in &warnings {
        log::warn!("{} fit: {w}", spec.family);
    }
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        family: spec.family,
        params: spec.params.clone(),
        columns: columns.to_vec(),
        standardizer,
        learned,
        n_train: y.len(),
        warnings,
    })
}

/// Default RF feature-subset size: `max(1, ⌊p/3⌋)`.
pub fn default_mtry(p: usize) -> usize {
    (p / 3).max(1)
}

#[cfg(test)]
mod tests;
