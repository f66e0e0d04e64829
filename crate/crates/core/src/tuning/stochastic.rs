use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Evaluation, ParamSet, SearchSpace, TuningError, TuningMethod, TuningResult};

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`, in `[0, 1)`.
pub fn halton(index: u64, base: u64) -> f64 {
    let (mut i, mut f, mut r) = (index, 1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Best of `budget` points of a Halton sequence shifted by a seeded random
/// offset (modulo one) in every dimension.
pub fn stochastic_search<F>(
    objective: F,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
) -> Result<TuningResult, TuningError>
where
    F: Fn(&ParamSet) -> f64 + Sync,
{
    if budget == 0 {
        return Err(TuningError::ZeroBudget);
    }
    if space.dims.len() > PRIMES.len() {
        return Err(TuningError::InvalidSpace(format!("at most {} dimensions", PRIMES.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = space.dims.iter().map(|_| rng.random::<f64>()).collect();
    let points: Vec<ParamSet> = (0..budget as u64)
        .map(|i| {
            let genes: Vec<f64> = space
                .dims
                .iter()
                .enumerate()
                .map(|(d, dim)| {
                    let u = (halton(i + 1, PRIMES[d]) + shift[d]).fract();
                    dim.clamp(dim.lo + u * dim.width())
                })
                .collect();
            space.decode(&genes)
        })
        .collect();
    let evaluations: Vec<Evaluation> = points
        .into_par_iter()
        .map(|p| {
            let s = objective(&p);
            Evaluation::new(p, s)
        })
        .collect();
    TuningResult::from_evaluations(TuningMethod::Stochastic, evaluations)
}
