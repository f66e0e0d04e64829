use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Model confidence set settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsConfig {
    /// Size of the equal-predictive-ability test; members are the models
    /// with MCS p-value at least `alpha`.
    pub alpha: f64,
    /// Moving-block length in periods.
    pub block: usize,
    pub reps: usize,
}

impl Default for McsConfig {
    fn default() -> Self {
        McsConfig { alpha: 0.10, block: 12, reps: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsResult {
    /// MCS p-value per model, in input order.
    pub p_values: Vec<f64>,
    /// Models in the order they were eliminated; the survivor comes last.
    pub elimination_order: Vec<usize>,
    /// Every loss series is identical, so nothing can be eliminated.
    pub degenerate: bool,
}

impl McsResult {
    /// Models retained at level `alpha`, in input order.
    pub fn members(&self, alpha: f64) -> Vec<usize> {
        (0..self.p_values.len()).filter(|&i| self.p_values[i] >= alpha).collect()
    }
}

/// Resampled time indices: blocks of `block` consecutive periods with
/// uniform starts, concatenated and cut to `t`.
pub fn moving_block_indices<R: Rng>(t: usize, block: usize, rng: &mut R) -> Vec<usize> {
    let block = block.clamp(1, t.max(1));
    let mut out = Vec::with_capacity(t + block);
    while out.len() < t {
        let start = rng.random_range(0..=t - block);
        out.extend(start..start + block);
    }
    out.truncate(t);
    out
}

/// Model confidence set with the T-max statistic. `losses[i][t]` is the loss
/// of model `i` at date `t`. Bootstrap replicate `b` draws its blocks from
/// ChaCha stream `b` under `seed`, and the same draws serve every
/// elimination round.
pub fn mcs(losses: &[Vec<f64>], cfg: &McsConfig, seed: u64) -> Result<McsResult, EvalError> {
    let m = losses.len();
    if m < 2 {
        return Err(EvalError::TooFewModels(m));
    }
    let t = losses[0].len();
    if t == 0 {
        return Err(EvalError::Empty);
    }
    if let Some(l) = losses.iter().find(|l| l.len() != t) {
        return Err(EvalError::Misaligned(t, l.len()));
    }
    if cfg.reps == 0 || cfg.block == 0 {
        return Err(EvalError::Invalid("MCS needs positive reps and block".into()));
    }
    if losses.iter().all(|l| l == &losses[0]) {
        return Ok(McsResult { p_values: vec![1.0; m], elimination_order: (0..m).collect(), degenerate: true });
    }

    let means: Vec<f64> = losses.iter().map(|l| l.iter().sum::<f64>() / t as f64).collect();
    // boot[b][i]: mean loss of model i in replicate b
    let boot: Vec<Vec<f64>> = (0..cfg.reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let idx = moving_block_indices(t, cfg.block, &mut rng);
            losses.iter().map(|l| idx.iter().map(|&k| l[k]).sum::<f64>() / t as f64).collect()
        })
        .collect();

    let mut alive: Vec<usize> = (0..m).collect();
    let mut p_values = vec![0.0; m];
    let mut order = Vec::with_capacity(m);
    let mut running = 0.0f64;
    while alive.len() > 1 {
        let k = alive.len() as f64;
        let avg = alive.iter().map(|&i| means[i]).sum::<f64>() / k;
        let dbar: Vec<f64> = alive.iter().map(|&i| means[i] - avg).collect();
        let centered: Vec<Vec<f64>> = boot
            .iter()
            .map(|bm| {
                let bavg = alive.iter().map(|&i| bm[i]).sum::<f64>() / k;
                alive.iter().zip(&dbar).map(|(&i, d)| bm[i] - bavg - d).collect()
            })
            .collect();
        let var: Vec<f64> =
            (0..alive.len()).map(|j| centered.iter().map(|c| c[j] * c[j]).sum::<f64>() / cfg.reps as f64).collect();
        let stat = |x: f64, v: f64| {
            if v > 0.0 {
                x / v.sqrt()
            } else if x > 0.0 {
                f64::INFINITY
            } else if x < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        };
        let t_stats: Vec<f64> = dbar.iter().zip(&var).map(|(&d, &v)| stat(d, v)).collect();
        let (worst, &t_max) =
            t_stats.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).expect("non-empty");
        let exceed = centered
            .iter()
            .filter(|c| c.iter().zip(&var).map(|(&x, &v)| stat(x, v)).fold(f64::NEG_INFINITY, f64::max) > t_max)
            .count();
        let p = exceed as f64 / cfg.reps as f64;
        running = running.max(p);
        let out = alive.remove(worst);
        p_values[out] = running;
        order.push(out);
    }
    p_values[alive[0]] = 1.0;
    order.push(alive[0]);
    Ok(McsResult { p_values, elimination_order: order, degenerate: false })
}
