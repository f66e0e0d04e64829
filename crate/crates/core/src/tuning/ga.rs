use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Evaluation, SearchSpace, TuningError, TuningMethod, TuningResult};

/// Genetic-algorithm operators. Blend crossover draws each child gene
/// uniformly from the parents' interval widened by half its length on both
/// sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub generations: usize,
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Mutation standard deviation as a fraction of each dimension's width.
    pub mutation_scale: f64,
    /// Per-gene mutation probability; `None` means `1 / dimensions`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            generations: 25,
            population: 25,
            tournament: 3,
            crossover_rate: 0.7,
            mutation_scale: 0.1,
            mutation_rate: None,
            elitism: 1,
        }
    }
}

fn key(params: &super::ParamSet) -> Vec<u64> {
    params.iter().map(|(_, v)| v.to_bits()).collect()
}

/// Minimize `objective` over `space`. Identical decoded candidates are
/// evaluated once; `evaluations` lists each distinct candidate in the order
/// first seen.
pub fn ga_optimize<F>(objective: F, space: &SearchSpace, cfg: &GaConfig, seed: u64) -> Result<TuningResult, TuningError>
where
    F: Fn(&super::ParamSet) -> f64 + Sync,
{
    if cfg.population == 0 || cfg.generations == 0 {
        return Err(TuningError::ZeroBudget);
    }
    let dims = &space.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mutation_rate = cfg.mutation_rate.unwrap_or(1.0 / dims.len() as f64);
    let mut pop: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| dims.iter().map(|d| if d.width() > 0.0 { rng.random_range(d.lo..=d.hi) } else { d.lo }).collect())
        .collect();

    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut evaluations: Vec<Evaluation> = Vec::new();
    for generation in 0..cfg.generations {
        let decoded: Vec<_> = pop.iter().map(|g| space.decode(g)).collect();
        let mut fresh = Vec::new();
        for p in &decoded {
            let k = key(p);
            if !seen.contains_key(&k) {
                seen.insert(k, evaluations.len() + fresh.len());
                fresh.push(p.clone());
            }
        }
        let scored: Vec<Evaluation> = fresh
            .into_par_iter()
            .map(|p| {
                let s = objective(&p);
                Evaluation::new(p, s)
            })
            .collect();
        evaluations.extend(scored);
        if generation + 1 == cfg.generations {
            break;
        }

        let fitness: Vec<&Evaluation> = decoded.iter().map(|p| &evaluations[seen[&key(p)]]).collect();
        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| super::compare(fitness[a], fitness[b]).then(a.cmp(&b)));

        let mut next: Vec<Vec<f64>> = ranked.iter().take(cfg.elitism.min(pop.len())).map(|&i| pop[i].clone()).collect();
        let tournament = |rng: &mut ChaCha8Rng| {
            (0..cfg.tournament.max(1))
                .map(|_| rng.random_range(0..pop.len()))
                .min_by(|&a, &b| super::compare(fitness[a], fitness[b]).then(a.cmp(&b)))
                .expect("non-empty tournament")
        };
        while next.len() < cfg.population {
            let a = tournament(&mut rng);
            let b = tournament(&mut rng);
            let mut child: Vec<f64> = if rng.random::<f64>() < cfg.crossover_rate {
                pop[a]
                    .iter()
                    .zip(&pop[b])
                    .map(|(&x, &y)| {
                        let (lo, hi) = (x.min(y), x.max(y));
                        let d = hi - lo;
                        if d > 0.0 {
                            rng.random_range(lo - 0.5 * d..=hi + 0.5 * d)
                        } else {
                            lo
                        }
                    })
                    .collect()
            } else {
                pop[a].clone()
            };
            for (g, d) in child.iter_mut().zip(dims) {
                if d.width() > 0.0 && rng.random::<f64>() < mutation_rate {
                    let noise = Normal::new(0.0, cfg.mutation_scale * d.width()).expect("finite std");
                    *g += noise.sample(&mut rng);
                }
                *g = d.clamp(*g);
            }
            next.push(child);
        }
        pop = next;
    }
    TuningResult::from_evaluations(TuningMethod::Ga, evaluations)
}
