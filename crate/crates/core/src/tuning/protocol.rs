//! Per-family tuning protocols and the mapping from a chosen candidate to
//! model hyperparameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    alpha_grid, cv_mse, ga_optimize, kfold_adaptive_lasso, kfold_elastic_net, select_by_bic, stochastic_search,
    Dimension, Folds, GaConfig, ParamSet, PathGrid, SearchSpace, TuningError, TuningResult,
};
use crate::features::{BlockKind, ColumnKind, ColumnLabel};
use crate::linalg::{ridge_solve, Standardizer};
use crate::models::{
    default_features_per_step, default_mtry, fit, Hyperparams, ModelError, ModelFamily, ModelSpec, TargetScale,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMethod {
    Bic,
    KFold,
    Ga,
    Stochastic,
    /// Hyperparameters fixed by the protocol; nothing is searched.
    Fixed,
}

impl TuningMethod {
    pub fn for_family(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Ar | ModelFamily::Fm => TuningMethod::Bic,
            ModelFamily::En => TuningMethod::KFold,
            ModelFamily::Al | ModelFamily::Lb => TuningMethod::Ga,
            ModelFamily::Bt => TuningMethod::Stochastic,
            ModelFamily::Rf => TuningMethod::Fixed,
        }
    }
}

/// Search settings shared by every cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningPolicy {
    pub folds: usize,
    pub refresh_months: u32,
    /// BIC candidates are lag orders `1..=max_order`.
    pub max_order: usize,
    pub lambda_count: usize,
    pub lambda_ratio: f64,
    pub alphas: Vec<f64>,
    #[serde(flatten)]
    pub ga: GaConfig,
    /// Draws of the boosted-tree search.
    pub budget: usize,
    /// Ridge pilot penalty range, as powers of ten.
    pub ridge_log10_min: f64,
    pub ridge_log10_max: f64,
    pub lb_max_steps: usize,
    pub lb_feature_cap: usize,
    pub bt_max_steps: usize,
    pub bt_min_shrinkage: f64,
    pub bt_max_depth: usize,
    pub bt_min_leaf: usize,
    pub rf_trees: usize,
    pub rf_min_node: usize,
}

impl Default for TuningPolicy {
    fn default() -> Self {
        TuningPolicy {
            folds: 5,
            refresh_months: 24,
            max_order: 12,
            lambda_count: 100,
            lambda_ratio: 1e-4,
            alphas: alpha_grid(),
            ga: GaConfig::default(),
            budget: 50,
            ridge_log10_min: -2.0,
            ridge_log10_max: 5.0,
            lb_max_steps: 500,
            lb_feature_cap: 200,
            bt_max_steps: 500,
            bt_min_shrinkage: 0.01,
            bt_max_depth: 10,
            bt_min_leaf: 1,
            rf_trees: 200,
            rf_min_node: 5,
        }
    }
}

impl TuningPolicy {
    fn path(&self) -> PathGrid {
        PathGrid { count: self.lambda_count, ratio: self.lambda_ratio }
    }
}

/// Columns of an own-lag/factor design that belong to lag order `order`:
/// own lags and factor lags with lag index below `order`.
pub fn order_columns(labels: &[ColumnLabel], order: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l.kind, ColumnKind::OwnLag | ColumnKind::Block(BlockKind::F)) && l.index < order)
        .map(|(i, _)| i)
        .collect()
}

fn need(params: &ParamSet, name: &str) -> Result<f64, TuningError> {
    params.get(name).ok_or_else(|| TuningError::InvalidSpace(format!("candidate lacks {name}")))
}

/// Hyperparameters of `family` for a chosen candidate on a design with
/// `n_columns` columns.
pub fn hyperparams_for(
    family: ModelFamily,
    params: &ParamSet,
    n_columns: usize,
    policy: &TuningPolicy,
) -> Result<Hyperparams, TuningError> {
    Ok(match family {
        ModelFamily::Ar | ModelFamily::Fm => Hyperparams::Ols,
        ModelFamily::En => Hyperparams::ElasticNet { alpha: need(params, "alpha")?, lambda: need(params, "lambda")? },
        ModelFamily::Al => Hyperparams::AdaptiveLasso {
            ridge_lambda: need(params, "ridge_lambda")?,
            lasso_lambda: need(params, "lasso_lambda")?,
        },
        ModelFamily::Lb => Hyperparams::LinearBoost {
            steps: need(params, "steps")?.round() as usize,
            shrinkage: need(params, "shrinkage")?,
            features_per_step: default_features_per_step(n_columns, policy.lb_feature_cap),
        },
        ModelFamily::Rf => Hyperparams::RandomForest {
            trees: policy.rf_trees,
            min_node: policy.rf_min_node,
            mtry: default_mtry(n_columns),
        },
        ModelFamily::Bt => Hyperparams::BoostedTrees {
            steps: need(params, "steps")?.round() as usize,
            shrinkage: need(params, "shrinkage")?,
            max_depth: policy.bt_max_depth,
            min_leaf: policy.bt_min_leaf,
        },
    })
}

fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

/// Ridge on standardized columns and target, as in the adaptive-lasso
/// pilot, predicting new rows on the original scale.
fn ridge_fit_predict(lambda: f64, zt: &DMatrix<f64>, yt: &[f64], zv: &DMatrix<f64>) -> Vec<f64> {
    let std = Standardizer::fit(zt);
    let scale = TargetScale::fit(yt);
    let beta = ridge_solve(&std.transform(zt), &DVector::from_column_slice(&scale.apply(yt)), lambda);
    let fitted = std.transform(zv) * beta;
    fitted.iter().map(|f| scale.mean + scale.scale * f).collect()
}

/// Tune `family` on training design `x` (columns labelled by `labels`) and
/// target `y`.
pub fn tune_model(
    family: ModelFamily,
    x: &DMatrix<f64>,
    y: &[f64],
    labels: &[ColumnLabel],
    policy: &TuningPolicy,
    seed: u64,
) -> Result<TuningResult, TuningError> {
    let p = x.ncols();
    let model_fit_predict = |cand: &ParamSet, zt: &DMatrix<f64>, yt: &[f64], zv: &DMatrix<f64>| {
        let params = hyperparams_for(family, cand, p, policy)
            .map_err(|e| ModelError::InvalidHyperparameter { name: e.to_string(), value: f64::NAN })?;
        let names: Vec<String> = (0..p).map(|i| i.to_string()).collect();
        let model = fit(&ModelSpec { family, params, seed }, &names, zt, yt)?;
        model.predict(&names, zv)
    };
    match TuningMethod::for_family(family) {
        TuningMethod::Bic => {
            let orders: Vec<usize> = (1..=policy.max_order).collect();
            select_by_bic(&orders, |order| (select_columns(x, &order_columns(labels, order)), y.to_vec()))
        }
        TuningMethod::KFold => {
            let folds = Folds::random(y.len(), policy.folds, seed)?;
            kfold_elastic_net(x, y, &policy.alphas, policy.path(), &folds)
        }
        TuningMethod::Ga if family == ModelFamily::Al => {
            let folds = Folds::random(y.len(), policy.folds, seed)?;
            let space = SearchSpace::new(vec![Dimension::log10(
                "ridge_lambda",
                policy.ridge_log10_min,
                policy.ridge_log10_max,
            )])?;
            let ridge_cv = |cand: &ParamSet, zt: &DMatrix<f64>, yt: &[f64], zv: &DMatrix<f64>| {
                Ok(ridge_fit_predict(cand.get("ridge_lambda").unwrap_or(0.0), zt, yt, zv))
            };
            let pilot = ga_optimize(|c| cv_mse(&ridge_cv, x, y, &folds, c), &space, &policy.ga, seed)?;
            let ridge_lambda = need(&pilot.chosen, "ridge_lambda")?;
            let mut result = kfold_adaptive_lasso(x, y, ridge_lambda, policy.path(), &folds)?;
            result.pilot = Some(Box::new(pilot));
            Ok(result)
        }
        TuningMethod::Ga => {
            let folds = Folds::random(y.len(), policy.folds, seed)?;
            let space = SearchSpace::new(vec![
                Dimension::integer("steps", 1.0, policy.lb_max_steps as f64),
                Dimension::linear("shrinkage", 0.0, 1.0),
            ])?;
            ga_optimize(|c| cv_mse(&model_fit_predict, x, y, &folds, c), &space, &policy.ga, seed)
        }
        TuningMethod::Stochastic => {
            let folds = Folds::random(y.len(), policy.folds, seed)?;
            let space = SearchSpace::new(vec![
                Dimension::integer("steps", 1.0, policy.bt_max_steps as f64),
                Dimension::linear("shrinkage", policy.bt_min_shrinkage, 1.0),
            ])?;
            stochastic_search(|c| cv_mse(&model_fit_predict, x, y, &folds, c), &space, policy.budget, seed)
        }
        TuningMethod::Fixed => {
            TuningResult::from_evaluations(TuningMethod::Fixed, vec![super::Evaluation::new(ParamSet::new(), 0.0)])
        }
    }
}
