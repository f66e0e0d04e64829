use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("c{j}")).collect()
}

fn design(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 4.0 - 2.0);
    let y = (0..n).map(|i| 1.5 * x[(i, 0)] - 0.5 * x[(i, p - 1)] + rng.random::<f64>() - 0.5).collect();
    (x, y)
}

fn spec(family: ModelFamily, params: Hyperparams) -> ModelSpec {
    ModelSpec { family, params, seed: 7 }
}

fn all_specs(p: usize) -> Vec<ModelSpec> {
    vec![
        spec(ModelFamily::Ar, Hyperparams::Ols),
        spec(ModelFamily::En, Hyperparams::ElasticNet { alpha: 0.5, lambda: 1.0 }),
        spec(ModelFamily::Al, Hyperparams::AdaptiveLasso { ridge_lambda: 1.0, lasso_lambda: 1.0 }),
        spec(ModelFamily::Lb, Hyperparams::LinearBoost { steps: 50, shrinkage: 0.3, features_per_step: p.max(3) / 3 }),
        spec(ModelFamily::Rf, Hyperparams::RandomForest { trees: 20, min_node: 5, mtry: default_mtry(p) }),
        spec(ModelFamily::Bt, Hyperparams::BoostedTrees { steps: 20, shrinkage: 0.1, max_depth: 4, min_leaf: 1 }),
    ]
}

#[test]
fn ols_interpolates_exact_linear_data() {
    let (x, _) = design(40, 3, 1);
    let y: Vec<f64> = (0..40).map(|i| 2.0 + x[(i, 0)] - 3.0 * x[(i, 1)] + 0.25 * x[(i, 2)]).collect();
    let m = fit(&spec(ModelFamily::Ar, Hyperparams::Ols), &names(3), &x, &y).unwrap();
    let pred = m.predict(&names(3), &x).unwrap();
    for (p, t) in pred.iter().zip(&y) {
        assert!((p - t).abs() < 1e-10);
    }
    assert!(m.warnings.is_empty());
}

#[test]
fn ols_rank_deficiency_falls_back_with_warning() {
    let (mut x, y) = design(30, 3, 2);
    let c = x.column(0) * 2.0;
    x.set_column(2, &c);
    let m = fit(&spec(ModelFamily::Fm, Hyperparams::Ols), &names(3), &x, &y).unwrap();
    assert_eq!(m.warnings.len(), 1);
    assert!(m.predict(&names(3), &x).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn ols_training_row_prediction_matches_fit() {
    let (x, y) = design(50, 4, 3);
    let m = fit(&spec(ModelFamily::Ar, Hyperparams::Ols), &names(4), &x, &y).unwrap();
    let row: Vec<f64> = x.row(5).iter().copied().collect();
    let single = m.predict_row(&names(4), &row).unwrap();
    let all = m.predict(&names(4), &x).unwrap();
    assert_eq!(single, all[5]);
    // normal equations with intercept
    let xi = DMatrix::from_fn(50, 5, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let b = (xi.tr_mul(&xi)).try_inverse().unwrap() * xi.tr_mul(&DVector::from_column_slice(&y));
    let fitted = &xi * b;
    for i in 0..50 {
        assert!((fitted[i] - all[i]).abs() < 1e-9);
    }
}

#[test]
fn elastic_net_zero_penalty_is_ols() {
    let (x, y) = design(60, 5, 4);
    let en =
        fit(&spec(ModelFamily::En, Hyperparams::ElasticNet { alpha: 0.5, lambda: 0.0 }), &names(5), &x, &y).unwrap();
    let ols = fit(&spec(ModelFamily::Ar, Hyperparams::Ols), &names(5), &x, &y).unwrap();
    for (a, b) in en.coefficients().unwrap().iter().zip(ols.coefficients().unwrap()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn adaptive_lasso_zero_penalty_is_ols() {
    let (x, y) = design(60, 4, 5);
    let al = fit(
        &spec(ModelFamily::Al, Hyperparams::AdaptiveLasso { ridge_lambda: 0.5, lasso_lambda: 0.0 }),
        &names(4),
        &x,
        &y,
    )
    .unwrap();
    let ols = fit(&spec(ModelFamily::Ar, Hyperparams::Ols), &names(4), &x, &y).unwrap();
    for (a, b) in al.coefficients().unwrap().iter().zip(ols.coefficients().unwrap()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn linear_boost_zero_steps_predicts_mean() {
    let (x, y) = design(30, 6, 6);
    let m = fit(
        &spec(ModelFamily::Lb, Hyperparams::LinearBoost { steps: 0, shrinkage: 0.5, features_per_step: 2 }),
        &names(6),
        &x,
        &y,
    )
    .unwrap();
    let mean = y.iter().sum::<f64>() / 30.0;
    assert!(m.predict(&names(6), &x).unwrap().iter().all(|p| (p - mean).abs() < 1e-12));
}

#[test]
fn linear_boost_single_regressor_reaches_ols() {
    let (x, y) = design(50, 1, 7);
    let lb = fit(
        &spec(ModelFamily::Lb, Hyperparams::LinearBoost { steps: 500, shrinkage: 1.0, features_per_step: 1 }),
        &names(1),
        &x,
        &y,
    )
    .unwrap();
    let ols = fit(&spec(ModelFamily::Ar, Hyperparams::Ols), &names(1), &x, &y).unwrap();
    let (a, b) = (lb.predict(&names(1), &x).unwrap(), ols.predict(&names(1), &x).unwrap());
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-6);
    }
}

#[test]
fn random_forest_degenerate_cases() {
    let (x, _) = design(40, 3, 8);
    let constant = vec![2.5; 40];
    let m = fit(
        &spec(ModelFamily::Rf, Hyperparams::RandomForest { trees: 10, min_node: 5, mtry: 1 }),
        &names(3),
        &x,
        &constant,
    )
    .unwrap();
    assert!(m.predict(&names(3), &x).unwrap().iter().all(|p| *p == 2.5));

    let (x, y) = design(40, 3, 9);
    let m =
        fit(&spec(ModelFamily::Rf, Hyperparams::RandomForest { trees: 1, min_node: 40, mtry: 3 }), &names(3), &x, &y)
            .unwrap();
    // the single bootstrap tree cannot split; its leaf is the bootstrap mean
    let Learned::Forest { trees } = &m.learned else { unreachable!() };
    assert_eq!(trees[0].n_leaves(), 1);
    let pred = m.predict(&names(3), &x).unwrap();
    assert!(pred.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn random_forest_recovers_step_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = DMatrix::from_fn(400, 1, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let y: Vec<f64> = (0..400).map(|i| if x[(i, 0)] > 0.0 { 1.0 } else { 0.0 }).collect();
    let m =
        fit(&spec(ModelFamily::Rf, Hyperparams::RandomForest { trees: 200, min_node: 5, mtry: 1 }), &names(1), &x, &y)
            .unwrap();
    let pred = m.predict(&names(1), &x).unwrap();
    let mse = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / 400.0;
    assert!(mse < 0.02, "mse {mse}");
    assert_eq!(pred, m.predict(&names(1), &x).unwrap());
}

#[test]
fn boosted_trees_single_full_tree_interpolates() {
    let (x, y) = design(50, 3, 11);
    let m = fit_boosted_trees(&x, &y, 1, 1.0, usize::MAX, 1);
    let Learned::BoostedTrees { train_loss, .. } = m else { unreachable!() };
    assert!(train_loss[1] < 1e-20);
}

#[test]
fn boosted_trees_zero_shrinkage_is_frozen() {
    let (x, y) = design(30, 2, 12);
    let m = fit(
        &spec(ModelFamily::Bt, Hyperparams::BoostedTrees { steps: 5, shrinkage: 0.0, max_depth: 3, min_leaf: 1 }),
        &names(2),
        &x,
        &y,
    )
    .unwrap();
    let mean = y.iter().sum::<f64>() / 30.0;
    assert!(m.predict(&names(2), &x).unwrap().iter().all(|p| (p - mean).abs() < 1e-12));
}

#[test]
fn schema_mismatch_lists_differences() {
    let (x, y) = design(30, 3, 13);
    let m = fit(&spec(ModelFamily::Ar, Hyperparams::Ols), &names(3), &x, &y).unwrap();
    let wrong = vec!["c0".to_string(), "c1".to_string(), "zz".to_string()];
    match m.predict(&wrong, &x) {
        Err(ModelError::Schema { missing, unexpected }) => {
            assert_eq!(missing, vec!["c2"]);
            assert_eq!(unexpected, vec!["zz"]);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(m.predict(&names(2), &x), Err(ModelError::Width { .. })));
}

#[test]
fn hyperparameter_ranges_enforced() {
    let (x, y) = design(20, 2, 14);
    let bad = spec(ModelFamily::En, Hyperparams::ElasticNet { alpha: 1.5, lambda: 1.0 });
    assert!(matches!(fit(&bad, &names(2), &x, &y), Err(ModelError::InvalidHyperparameter { .. })));
    let bad = spec(ModelFamily::Lb, Hyperparams::LinearBoost { steps: 501, shrinkage: 0.1, features_per_step: 1 });
    assert!(bad.validate().is_err());
    let mismatched = spec(ModelFamily::Rf, Hyperparams::Ols);
    assert!(matches!(fit(&mismatched, &names(2), &x, &y), Err(ModelError::FamilyMismatch { .. })));
}

#[test]
fn json_round_trip_preserves_predictions() {
    let (x, y) = design(40, 4, 15);
    for s in all_specs(4) {
        let m = fit(&s, &names(4), &x, &y).unwrap();
        let back = FittedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m.predict(&names(4), &x).unwrap(), back.predict(&names(4), &x).unwrap(), "{}", s.family);
    }
}

#[test]
fn column_permutation_leaves_linear_predictions_unchanged() {
    let (x, y) = design(60, 5, 16);
    let perm = [3, 0, 4, 1, 2];
    let px = DMatrix::from_fn(60, 5, |i, j| x[(i, perm[j])]);
    let pnames: Vec<String> = perm.iter().map(|&j| format!("c{j}")).collect();
    for s in all_specs(5).into_iter().take(3) {
        let a = fit(&s, &names(5), &x, &y).unwrap().predict(&names(5), &x).unwrap();
        let b = fit(&s, &pnames, &px, &y).unwrap();
        // predicting with the original column order exercises schema remapping
        let b = b.predict(&names(5), &x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8, "{}", s.family);
        }
    }
}

#[test]
fn column_permutation_tree_and_boosting_distributions_agree() {
    let (x, y) = design(80, 4, 17);
    let perm = [2, 3, 0, 1];
    let px = DMatrix::from_fn(80, 4, |i, j| x[(i, perm[j])]);
    let pnames: Vec<String> = perm.iter().map(|&j| format!("c{j}")).collect();
    let (_, sd) = crate::linalg::mean_std(&y);
    for base in all_specs(4).into_iter().skip(3) {
        let mut diff = 0.0;
        for seed in 0..25 {
            let s = ModelSpec { seed, ..base.clone() };
            let a = fit(&s, &names(4), &x, &y).unwrap().predict(&names(4), &x).unwrap();
            let b = fit(&s, &pnames, &px, &y).unwrap().predict(&names(4), &x).unwrap();
            diff += a.iter().zip(&b).map(|(u, v)| u - v).sum::<f64>() / 80.0;
        }
        assert!((diff / 25.0).abs() < 0.01 * sd, "{}", base.family);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_target_scales_linear_predictions(seed in any::<u64>(), c in 0.1f64..50.0) {
        let (x, y) = design(40, 4, seed);
        let cy: Vec<f64> = y.iter().map(|v| v * c).collect();
        for s in all_specs(4).into_iter().take(4) {
            let a = fit(&s, &names(4), &x, &y).unwrap().predict(&names(4), &x).unwrap();
            let b = fit(&s, &names(4), &x, &cy).unwrap().predict(&names(4), &x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u * c - v).abs() < 1e-7 * (1.0 + v.abs()), "{}", s.family);
            }
        }
    }

    #[test]
    fn tree_predictions_are_bounded(seed in any::<u64>()) {
        let (x, y) = design(50, 3, seed);
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let probe = DMatrix::from_fn(30, 3, |_, _| rng.random::<f64>() * 10.0 - 5.0);
        for s in all_specs(3).into_iter().skip(4) {
            let m = fit(&s, &names(3), &x, &y).unwrap();
            for p in m.predict(&names(3), &probe).unwrap() {
                prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn boosted_training_loss_never_increases(seed in any::<u64>(), eta in 0.0f64..=1.0) {
        let (x, y) = design(40, 3, seed);
        let Learned::BoostedTrees { train_loss, .. } = fit_boosted_trees(&x, &y, 15, eta, 3, 1) else { unreachable!() };
        for w in train_loss.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
