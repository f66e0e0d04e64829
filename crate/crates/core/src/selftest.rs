//! Quick built-in checks of the numerical core, run by `marxbench selftest`.
//!
//! Each check rebuilds a known identity or calibration on small seeded
//! inputs, so a broken build or platform shows up in seconds without the
//! test suite.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::date::YearMonth;
use crate::eval::{dm_test, gr_fluctuation, mcs, McsConfig};
use crate::features::{
    build_blocks, fused_ridge, rotation_ridge, BlockKind, BlockSet, FeatureConfig, RotationMatrices,
};
use crate::fredmd::Tcode;
use crate::models::{fit_boosted_trees, kkt_violation, lambda_max, solve_standardized, ElasticNetOptions, Learned};
use crate::panel::Panel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn rotation() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (k, p, t) = (rng.random_range(1..=3), rng.random_range(1..=6), rng.random_range(2..=40));
        let lambda = [0.1, 1.0, 10.0][rng.random_range(0..3)];
        let x = random(t, k * p, &mut rng);
        let y = DVector::from_fn(t, |_, _| rng.random::<f64>());
        let rot = RotationMatrices::new(p).block_diagonal(k);
        let (_, beta) = rotation_ridge(&x, &y, lambda, &rot);
        worst = worst.max((beta - fused_ridge(&x, &y, lambda, &rot)).amax());
    }
    (worst < 1e-8, format!("max |Δβ| {worst:.1e}"))
}

fn causality() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = FeatureConfig { factors: 2, factor_lags: 1, x_lags: 2, marx_order: 3, maf_lags: 3, ..Default::default() };
    let pointwise = BlockSet::of(&[BlockKind::X, BlockKind::Marx, BlockKind::Level]);
    let start = YearMonth::new(1970, 1).expect("valid date");
    let dated = |m: DMatrix<f64>| {
        let names = (0..m.ncols()).map(|j| format!("s{j}")).collect();
        Panel::new((0..m.nrows()).map(|i| start.offset(i as i32)).collect(), names, m)
    };
    for _ in 0..100 {
        let t = rng.random_range(8..30);
        let short = random(t, 4, &mut rng).map(|v| v + 2.0);
        let mut long = short.clone().resize_vertically(t + 5, 0.0);
        for i in t..t + 5 {
            for j in 0..4 {
                long[(i, j)] = rng.random::<f64>() * 50.0 + 1.0;
            }
        }
        let tcodes = [Tcode::Level; 4];
        let (Ok(a), Ok(b)) = (
            build_blocks(&cfg, &dated(short.clone()), &dated(short), &tcodes, pointwise),
            build_blocks(&cfg, &dated(long.clone()), &dated(long), &tcodes, pointwise),
        ) else {
            return (false, "block construction failed".into());
        };
        for (x, y) in a.blocks.iter().zip(&b.blocks) {
            for i in 0..t {
                for j in 0..x.n_columns() {
                    let (u, v) = (x.values[(i, j)], y.values[(i, j)]);
                    if u.to_bits() != v.to_bits() && !(u.is_nan() && v.is_nan()) {
                        return (false, format!("{:?} row {i} changed after appending rows", x.kind));
                    }
                }
            }
        }
    }
    (true, "100 trials bit-identical".into())
}

fn elastic_net() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (n, p) = (rng.random_range(20..60), rng.random_range(3..12));
        let z = random(n, p, &mut rng);
        let y: Vec<f64> = (0..n).map(|i| z[(i, 0)] + 0.3 * rng.random::<f64>()).collect();
        let alpha = [0.25, 0.5, 1.0][rng.random_range(0..3)];
        let lambda = 0.1 * lambda_max(&z, &y, alpha);
        let opts = ElasticNetOptions { tolerance: 1e-14, max_sweeps: 1_000_000 };
        match solve_standardized(&z, &y, alpha, lambda, None, None, &opts) {
            Ok(beta) => worst = worst.max(kkt_violation(&z, &y, &beta, alpha, lambda, None) / (1.0 + lambda)),
            Err(e) => return (false, e.to_string()),
        }
    }
    (worst < 1e-6, format!("max KKT violation {worst:.1e}"))
}

fn boosting() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (n, p) = (rng.random_range(10..60), rng.random_range(1..6));
        let z = random(n, p, &mut rng);
        let y: Vec<f64> = (0..n).map(|i| (3.0 * z[(i, 0)]).sin() + rng.random::<f64>()).collect();
        let Learned::BoostedTrees { train_loss, .. } = fit_boosted_trees(&z, &y, 30, rng.random(), 3, 1) else {
            return (false, "unexpected model kind".into());
        };
        if !train_loss.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) {
            return (false, "training loss increased".into());
        }
    }
    (true, "training loss non-increasing on 20 sets".into())
}

fn dm_size() -> (bool, String) {
    let sims = 4000;
    let rejected: usize = (0..sims)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            rng.set_stream(s as u64);
            let d = normals(456, &mut rng);
            usize::from(dm_test(&d, 1, false).ok().and_then(|r| r.p_value).is_some_and(|p| p < 0.05))
        })
        .sum();
    let rate = rejected as f64 / sims as f64;
    ((0.035..=0.065).contains(&rate), format!("size {:.2}% at nominal 5%", rate * 100.0))
}

fn fluctuation() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = normals(200, &mut rng);
    let (Ok(path), Ok(full)) = (gr_fluctuation(&d, 200, 3), dm_test(&d, 3, false)) else {
        return (false, "statistic undefined".into());
    };
    let gap = (path.statistics[0].unwrap_or(f64::NAN) - full.statistic.unwrap_or(f64::NAN)).abs();
    (gap < 1e-10, format!("window = T gap {gap:.1e}"))
}

fn confidence_set() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base: Vec<f64> = normals(150, &mut rng).iter().map(|v| v * v).collect();
    let losses: Vec<Vec<f64>> = [3.0, 0.0, 6.0].iter().map(|s| base.iter().map(|v| v + s).collect()).collect();
    match mcs(&losses, &McsConfig { reps: 500, ..Default::default() }, 1) {
        Ok(r) => {
            let members = r.members(0.10);
            (members == vec![1], format!("members {members:?} (dominant model 1)"))
        }
        Err(e) => (false, e.to_string()),
    }
}

/// Runs every check and reports each one.
pub fn run_selftest() -> Vec<CheckResult> {
    let checks: [(&'static str, fn() -> (bool, String)); 7] = [
        ("rotation ridge equals fused ridge", rotation),
        ("pointwise feature causality", causality),
        ("elastic net optimality", elastic_net),
        ("boosted trees loss monotone", boosting),
        ("Diebold-Mariano size", dm_size),
        ("fluctuation path at full window", fluctuation),
        ("confidence set under dominance", confidence_set),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = f();
            CheckResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_is_green() {
        for r in super::run_selftest() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
