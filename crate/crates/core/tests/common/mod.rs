//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Accelerated proximal gradient on
/// `Σ (y − Zβ)² + λ Σ_k (α w_k |β_k| + (1 − α) β_k²)`.
pub fn prox_gradient_en(z: &DMatrix<f64>, y: &[f64], alpha: f64, lambda: f64, weights: Option<&[f64]>) -> Vec<f64> {
    let p = z.ncols();
    let yv = DVector::from_column_slice(y);
    let gram = z.tr_mul(z);
    let zy = z.tr_mul(&yv);
    // Lipschitz constant of the smooth part: 2 λ_max(Z'Z) + 2 λ (1 − α)
    let top = gram.clone().symmetric_eigen().eigenvalues.max().max(0.0);
    let step = 1.0 / (2.0 * top + 2.0 * lambda * (1.0 - alpha) + 1e-12);
    let thresh: Vec<f64> = (0..p).map(|k| step * lambda * alpha * weights.map_or(1.0, |w| w[k])).collect();
    let mut beta = DVector::zeros(p);
    let mut prev = beta.clone();
    let mut momentum = beta.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let grad = (&gram * &momentum - &zy) * 2.0 + &momentum * (2.0 * lambda * (1.0 - alpha));
        let moved = &momentum - grad * step;
        let next = DVector::from_fn(p, |k, _| {
            let v = moved[k];
            v.signum() * (v.abs() - thresh[k]).max(0.0)
        });
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = &next + (&next - &prev) * ((t - 1.0) / t_next);
        let change = (&next - &beta).amax();
        prev = next.clone();
        beta = next;
        t = t_next;
        if change < 1e-14 {
            break;
        }
    }
    beta.iter().copied().collect()
}

/// Ridge pilot `(Z'Z + λI)⁻¹ Z'y` by explicit inversion.
pub fn ridge_pilot(z: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let a = z.tr_mul(z) + DMatrix::identity(z.ncols(), z.ncols()) * lambda;
    let b = a.try_inverse().expect("ridge system is invertible") * z.tr_mul(&DVector::from_column_slice(y));
    b.iter().copied().collect()
}

/// Adaptive lasso as a weighted lasso with weights `1 / |pilot|`.
pub fn adaptive_lasso_oracle(z: &DMatrix<f64>, y: &[f64], ridge_lambda: f64, lasso_lambda: f64) -> Vec<f64> {
    let pilot = ridge_pilot(z, y, ridge_lambda);
    let weights: Vec<f64> = pilot.iter().map(|b| 1.0 / b.abs()).collect();
    prox_gradient_en(z, y, 1.0, lasso_lambda, Some(&weights))
}

/// Componentwise L2 boosting written from its definition: at each step draw
/// the candidate columns, fit each by least squares through the origin on
/// the residual, keep the best one.
pub fn linear_boost_reference(
    z: &DMatrix<f64>,
    y: &[f64],
    steps: usize,
    shrinkage: f64,
    draws: usize,
    seed: u64,
) -> (Vec<usize>, Vec<f64>) {
    let (n, p) = z.shape();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut resid: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut coef = vec![0.0; p];
    let mut chosen = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..steps {
        let mut cands = rand::seq::index::sample(&mut rng, p, draws.clamp(1, p)).into_vec();
        cands.sort();
        let mut best = (usize::MAX, f64::INFINITY, 0.0);
        for k in cands {
            let col: Vec<f64> = z.column(k).iter().copied().collect();
            let ss: f64 = col.iter().map(|v| v * v).sum();
            let b = if ss > 0.0 { col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / ss } else { 0.0 };
            let rss: f64 = resid.iter().zip(&col).map(|(r, a)| (r - b * a).powi(2)).sum();
            if best.0 == usize::MAX || rss < best.1 {
                best = (k, rss, b);
            }
        }
        coef[best.0] += shrinkage * best.2;
        for (r, a) in resid.iter_mut().zip(z.column(best.0).iter()) {
            *r -= shrinkage * best.2 * a;
        }
        chosen.push(best.0);
    }
    (chosen, coef)
}

/// Model confidence set computed the slow way: every round resamples the
/// raw loss series for each replicate and rebuilds all statistics from
/// scratch. Replicate `b` uses ChaCha stream `b` of `seed`, the same block
/// draws as the library. Returns MCS p-values.
pub fn mcs_reference(losses: &[Vec<f64>], block: usize, reps: usize, seed: u64) -> Vec<f64> {
    let m = losses.len();
    let t = losses[0].len();
    let draws: Vec<Vec<usize>> = (0..reps)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut idx = Vec::new();
            while idx.len() < t {
                let start = rng.random_range(0..=t - block);
                for k in start..start + block {
                    idx.push(k);
                }
            }
            idx.truncate(t);
            idx
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut alive: Vec<usize> = (0..m).collect();
    let mut pvals = vec![1.0; m];
    let mut worst_p = 0.0f64;
    while alive.len() > 1 {
        // d_i,t = L_i,t − mean over alive models of L_j,t
        let d: Vec<Vec<f64>> = alive
            .iter()
            .map(|&i| {
                (0..t)
                    .map(|s| losses[i][s] - alive.iter().map(|&j| losses[j][s]).sum::<f64>() / alive.len() as f64)
                    .collect()
            })
            .collect();
        let dbar: Vec<f64> = d.iter().map(|x| mean(x)).collect();
        let boot: Vec<Vec<f64>> = draws
            .iter()
            .map(|idx| d.iter().map(|x| idx.iter().map(|&k| x[k]).sum::<f64>() / t as f64).collect())
            .collect();
        let var: Vec<f64> = (0..alive.len())
            .map(|j| boot.iter().map(|bb| (bb[j] - dbar[j]).powi(2)).sum::<f64>() / reps as f64)
            .collect();
        let tstat: Vec<f64> = (0..alive.len()).map(|j| dbar[j] / var[j].sqrt()).collect();
        let mut worst = 0;
        for j in 1..alive.len() {
            if tstat[j] > tstat[worst] {
                worst = j;
            }
        }
        let tmax = tstat[worst];
        let mut count = 0;
        for bb in &boot {
            let star = (0..alive.len()).map(|j| (bb[j] - dbar[j]) / var[j].sqrt()).fold(f64::NEG_INFINITY, f64::max);
            if star > tmax {
                count += 1;
            }
        }
        worst_p = worst_p.max(count as f64 / reps as f64);
        pvals[alive[worst]] = worst_p;
        alive.remove(worst);
    }
    pvals
}

pub fn normal_draws(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

/// Largest subgradient violation of the elastic-net optimality conditions,
/// relative to `1 + λ`.
pub fn kkt_oracle(z: &DMatrix<f64>, y: &[f64], beta: &[f64], alpha: f64, lambda: f64, weights: Option<&[f64]>) -> f64 {
    let (n, p) = z.shape();
    let resid: Vec<f64> = (0..n).map(|i| y[i] - (0..p).map(|k| z[(i, k)] * beta[k]).sum::<f64>()).collect();
    let mut worst = 0.0f64;
    for k in 0..p {
        let smooth = -2.0 * (0..n).map(|i| z[(i, k)] * resid[i]).sum::<f64>() + 2.0 * lambda * (1.0 - alpha) * beta[k];
        let l1 = lambda * alpha * weights.map_or(1.0, |w| w[k]);
        let v = if beta[k] > 0.0 {
            (smooth + l1).abs()
        } else if beta[k] < 0.0 {
            (smooth - l1).abs()
        } else {
            (smooth.abs() - l1).max(0.0)
        };
        worst = worst.max(v / (1.0 + lambda));
    }
    worst
}
