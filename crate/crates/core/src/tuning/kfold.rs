use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Evaluation, ParamSet, TuningError, TuningMethod, TuningResult};
use crate::linalg::{ridge_solve, Standardizer};
use crate::models::elastic_net::lambda_max_standardized;
use crate::models::{solve_standardized, ElasticNetOptions, ModelError, TargetScale, EXCLUSION_THRESHOLD};

/// Random assignment of rows to `k` folds whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    k: usize,
    assignment: Vec<usize>,
}

impl Folds {
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self, TuningError> {
        if k < 2 {
            return Err(TuningError::TooFewFolds(k));
        }
        if n / k < 2 {
            return Err(TuningError::FoldTooSmall { fold: k - 1, rows: n / k });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignment = vec![0; n];
        for (pos, &row) in order.iter().enumerate() {
            assignment[row] = pos % k;
        }
        Ok(Folds { k, assignment })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.assignment.len()
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

fn rows_of(z: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), z.ncols(), |i, j| z[(rows[i], j)])
}

fn pick(y: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| y[i]).collect()
}

/// Pooled held-out mean squared error of one candidate. Any fold failure
/// gives `+inf`.
pub fn cv_mse<F>(fit_predict: &F, z: &DMatrix<f64>, y: &[f64], folds: &Folds, candidate: &ParamSet) -> f64
where
    F: Fn(&ParamSet, &DMatrix<f64>, &[f64], &DMatrix<f64>) -> Result<Vec<f64>, ModelError>,
{
    let mut sse = 0.0;
    for f in 0..folds.k() {
        let (train, test) = (folds.train_rows(f), folds.test_rows(f));
        match fit_predict(candidate, &rows_of(z, &train), &pick(y, &train), &rows_of(z, &test)) {
            Ok(pred) => sse += test.iter().zip(&pred).map(|(&i, p)| (y[i] - p).powi(2)).sum::<f64>(),
            Err(_) => return f64::INFINITY,
        }
    }
    let mse = sse / folds.n_rows() as f64;
    if mse.is_nan() {
        f64::INFINITY
    } else {
        mse
    }
}

/// K-fold cross-validation over an explicit grid. `fit_predict` trains on
/// the first design/target pair and predicts the rows of the second design.
pub fn kfold_cv<F>(
    fit_predict: F,
    z: &DMatrix<f64>,
    y: &[f64],
    grid: &[ParamSet],
    k: usize,
    seed: u64,
) -> Result<TuningResult, TuningError>
where
    F: Fn(&ParamSet, &DMatrix<f64>, &[f64], &DMatrix<f64>) -> Result<Vec<f64>, ModelError> + Sync,
{
    if grid.is_empty() {
        return Err(TuningError::EmptyGrid);
    }
    let folds = Folds::random(y.len(), k, seed)?;
    let evaluations: Vec<Evaluation> =
        grid.par_iter().map(|c| Evaluation::new(c.clone(), cv_mse(&fit_predict, z, y, &folds, c))).collect();
    TuningResult::from_evaluations(TuningMethod::KFold, evaluations)
}

/// `count` log-spaced penalties from `max` down to `max·ratio`.
pub fn lambda_grid(max: f64, count: usize, ratio: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![max],
        _ => (0..count).map(|i| max * ratio.powf(i as f64 / (count - 1) as f64)).collect(),
    }
}

/// Mixing weights `0.01, 0.02, ..., 1`.
pub fn alpha_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

/// Size of a warm-started penalty path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGrid {
    pub count: usize,
    /// Smallest penalty as a fraction of the largest.
    pub ratio: f64,
}

impl Default for PathGrid {
    fn default() -> Self {
        PathGrid { count: 100, ratio: 1e-4 }
    }
}

/// Solver settings inside cross-validation, where scores only need to rank
/// candidates: coordinate updates stop once no standardized slope moves by
/// more than about `1e-6` per sweep.
fn cv_options(rows: usize) -> ElasticNetOptions {
    ElasticNetOptions { tolerance: 1e-6 * rows.max(1) as f64, ..ElasticNetOptions::default() }
}

/// Held-out squared errors of a warm-started lasso-type path on one fold.
/// `prepare` runs once on the standardized training fold; `solve` returns
/// standardized slopes for one penalty.
fn path_sse<T, P, S>(
    z_train: &DMatrix<f64>,
    y_train: &[f64],
    z_test: &DMatrix<f64>,
    y_test: &[f64],
    lambdas: &[f64],
    prepare: P,
    solve: S,
) -> Vec<f64>
where
    P: Fn(&DMatrix<f64>, &[f64]) -> T,
    S: Fn(&T, &DMatrix<f64>, &[f64], Option<&[f64]>, f64) -> Result<Vec<f64>, ModelError>,
{
    let std = Standardizer::fit(z_train);
    let (zt, zv) = (std.transform(z_train), std.transform(z_test));
    let scale = TargetScale::fit(y_train);
    let ys = scale.apply(y_train);
    let state = prepare(&zt, &ys);
    let mut warm: Option<Vec<f64>> = None;
    lambdas
        .iter()
        .map(|&lambda| match solve(&state, &zt, &ys, warm.as_deref(), lambda) {
            Ok(beta) => {
                let fitted = &zv * DVector::from_column_slice(&beta);
                let sse =
                    y_test.iter().zip(fitted.iter()).map(|(y, f)| (y - scale.mean - scale.scale * f).powi(2)).sum();
                warm = Some(beta);
                sse
            }
            Err(_) => {
                warm = None;
                f64::INFINITY
            }
        })
        .collect()
}

/// Cross-validated elastic net over `alphas` and, for each, a penalty path
/// anchored at the full-sample `λ_max`.
pub fn kfold_elastic_net(
    z: &DMatrix<f64>,
    y: &[f64],
    alphas: &[f64],
    path: PathGrid,
    folds: &Folds,
) -> Result<TuningResult, TuningError> {
    if alphas.is_empty() || path.count == 0 {
        return Err(TuningError::EmptyGrid);
    }
    let zs = Standardizer::fit(z).transform(z);
    let ys = TargetScale::fit(y).apply(y);
    let per_alpha: Vec<Vec<Evaluation>> = alphas
        .par_iter()
        .map(|&alpha| {
            let lambdas = lambda_grid(lambda_max_standardized(&zs, &ys, alpha, None), path.count, path.ratio);
            let mut sse = vec![0.0; lambdas.len()];
            for f in 0..folds.k() {
                let (train, test) = (folds.train_rows(f), folds.test_rows(f));
                let fold = path_sse(
                    &rows_of(z, &train),
                    &pick(y, &train),
                    &rows_of(z, &test),
                    &pick(y, &test),
                    &lambdas,
                    |_, _| (),
                    |_, zt, yt, warm, lambda| {
                        solve_standardized(zt, yt, alpha, lambda, None, warm, &cv_options(zt.nrows()))
                    },
                );
                for (acc, v) in sse.iter_mut().zip(fold) {
                    *acc += v;
                }
            }
            lambdas
                .iter()
                .zip(sse)
                .map(|(&lambda, s)| {
                    let params = ParamSet::new().with("alpha", alpha).with("lambda", lambda);
                    Evaluation::new(params, s / y.len() as f64)
                })
                .collect()
        })
        .collect();
    TuningResult::from_evaluations(TuningMethod::KFold, per_alpha.into_iter().flatten().collect())
}

/// Adaptive-lasso slopes for a fixed ridge pilot, solving on the kept
/// columns scaled by the pilot magnitudes.
fn weighted_lasso(
    z: &DMatrix<f64>,
    ys: &[f64],
    pilot: &[f64],
    warm: Option<&[f64]>,
    lambda: f64,
) -> Result<Vec<f64>, ModelError> {
    let kept: Vec<usize> = (0..z.ncols()).filter(|&k| pilot[k].abs() >= EXCLUSION_THRESHOLD).collect();
    let scaled = DMatrix::from_fn(z.nrows(), kept.len(), |i, j| z[(i, kept[j])] * pilot[kept[j]].abs());
    let warm_theta: Option<Vec<f64>> = warm.map(|b| kept.iter().map(|&k| b[k] / pilot[k].abs()).collect());
    let theta = solve_standardized(&scaled, ys, 1.0, lambda, None, warm_theta.as_deref(), &cv_options(z.nrows()))?;
    let mut beta = vec![0.0; z.ncols()];
    for (j, &k) in kept.iter().enumerate() {
        beta[k] = theta[j] * pilot[k].abs();
    }
    Ok(beta)
}

fn ridge_pilot(z: &DMatrix<f64>, ys: &[f64], lambda: f64) -> Vec<f64> {
    ridge_solve(z, &DVector::from_column_slice(ys), lambda).iter().copied().collect()
}

/// Cross-validated lasso stage of the adaptive lasso for a fixed ridge
/// penalty. The pilot is re-estimated inside every fold.
pub fn kfold_adaptive_lasso(
    z: &DMatrix<f64>,
    y: &[f64],
    ridge_lambda: f64,
    path: PathGrid,
    folds: &Folds,
) -> Result<TuningResult, TuningError> {
    if path.count == 0 {
        return Err(TuningError::EmptyGrid);
    }
    let zs = Standardizer::fit(z).transform(z);
    let ys = TargetScale::fit(y).apply(y);
    let pilot = ridge_pilot(&zs, &ys, ridge_lambda);
    let weights: Vec<f64> =
        pilot.iter().map(|b| if b.abs() >= EXCLUSION_THRESHOLD { 1.0 / b.abs() } else { 0.0 }).collect();
    let lmax = (0..zs.ncols())
        .filter(|&k| weights[k] > 0.0)
        .map(|k| 2.0 * zs.column(k).iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>().abs() / weights[k])
        .fold(0.0, f64::max);
    let lambdas = lambda_grid(lmax, path.count, path.ratio);
    let per_fold: Vec<Vec<f64>> = (0..folds.k())
        .into_par_iter()
        .map(|f| {
            let (train, test) = (folds.train_rows(f), folds.test_rows(f));
            path_sse(
                &rows_of(z, &train),
                &pick(y, &train),
                &rows_of(z, &test),
                &pick(y, &test),
                &lambdas,
                |zt, yt| ridge_pilot(zt, yt, ridge_lambda),
                |pilot, zt, yt, warm, lambda| weighted_lasso(zt, yt, pilot, warm, lambda),
            )
        })
        .collect();
    let evaluations = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let sse: f64 = per_fold.iter().map(|f| f[i]).sum();
            let params = ParamSet::new().with("ridge_lambda", ridge_lambda).with("lasso_lambda", lambda);
            Evaluation::new(params, sse / y.len() as f64)
        })
        .collect();
    TuningResult::from_evaluations(TuningMethod::KFold, evaluations)
}
