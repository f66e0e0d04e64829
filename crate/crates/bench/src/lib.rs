//! Shared fixtures for the criterion benches.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use marxbench_core::fredmd::stationarize;
use marxbench_core::fredmd::synthetic::{generate, SyntheticConfig};
use marxbench_core::{Panel, YearMonth};

/// Standardized-looking design with a sparse linear signal.
pub fn design(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let y = (0..n).map(|i| z[(i, 0)] - 0.5 * z[(i, p / 2)] + 0.3 * (rng.random::<f64>() - 0.5)).collect();
    (z, y)
}

/// Stationary synthetic panel of `n_series` series, 1960 through 2000.
pub fn stationary_panel(n_series: usize) -> Panel {
    let raw = generate(&SyntheticConfig {
        n_series,
        start: YearMonth::new(1959, 1).expect("valid date"),
        end: YearMonth::new(2000, 12).expect("valid date"),
        late_series: false,
        ..Default::default()
    });
    let x = stationarize(&raw).expect("synthetic panel stationarizes").as_panel();
    // drop the rows lost to differencing
    let first = (0..x.n_periods()).find(|&i| x.values.row(i).iter().all(|v| v.is_finite())).unwrap_or(0);
    let rows = x.n_periods() - first;
    Panel::new(x.dates[first..].to_vec(), x.names.clone(), x.values.rows(first, rows).into_owned())
}

/// Squared-error losses of `m` models over `t` dates.
pub fn losses(m: usize, t: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|i| (0..t).map(|_| (rng.random::<f64>() - 0.5).powi(2) + 0.01 * i as f64).collect()).collect()
}
