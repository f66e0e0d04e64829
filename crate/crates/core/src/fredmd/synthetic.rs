//! Seeded FRED-MD-like panel generator.
//!
//! Series are driven by a few persistent latent factors plus idiosyncratic
//! AR(1) noise, then integrated according to their tcode so that applying
//! the tcode recovers a stationary factor-driven series. Used for smoke runs,
//! tests and benchmarks when no real vintage is available.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{RawPanel, Tcode};
use crate::date::YearMonth;
use crate::panel::MISSING;

/// Named series emitted first, with their tcodes.
const NAMED: &[(&str, u8)] = &[
    ("INDPRO", 5),
    ("UNRATE", 2),
    ("CPIAUCSL", 6),
    ("PAYEMS", 5),
    ("W875RX1", 5),
    ("DPCERA3M086SBEA", 5),
    ("RETAILx", 5),
    ("HOUST", 4),
    ("M2SL", 6),
    ("WPSFD49207", 6),
    ("FEDFUNDS", 2),
    ("GS10", 2),
    ("AWHMAN", 1),
    ("TB3MS", 2),
    ("S&P 500", 5),
    ("CES0600000008", 6),
    ("UMCSENTx", 2),
    ("TWEXAFEGSMTHx", 5),
    ("CUMFNS", 2),
    ("AMDMNOx", 5),
    ("NONREVSL", 7),
    ("HWI", 2),
    ("IPFINAL", 5),
    ("CLAIMSx", 5),
];

/// Tcodes cycled through for generic series beyond the named list.
const GENERIC_TCODES: &[u8] = &[5, 2, 6, 1, 4, 5, 3, 7];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub start: YearMonth,
    pub end: YearMonth,
    pub n_series: usize,
    pub n_factors: usize,
    pub seed: u64,
    /// Make the last series start two years late (leading missing cells).
    pub late_series: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            start: YearMonth::new(1959, 1).unwrap(),
            end: YearMonth::new(2002, 12).unwrap(),
            n_series: 20,
            n_factors: 3,
            seed: 20200101,
            late_series: true,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Generate a raw panel according to `cfg`.
pub fn generate(cfg: &SyntheticConfig) -> RawPanel {
    let t = (cfg.end.months_since(cfg.start) + 1).max(0) as usize;
    let k = cfg.n_series;
    let r = cfg.n_factors.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let burn = 100;
    let persistence: Vec<f64> = (0..r).map(|i| 0.9 - 0.15 * i as f64).collect();
    let mut factors = DMatrix::zeros(t, r);
    let mut state = vec![0.0; r];
    for step in 0..burn + t {
        for j in 0..r {
            state[j] = persistence[j] * state[j] + normal(&mut rng);
        }
        if step >= burn {
            for j in 0..r {
                factors[(step - burn, j)] = state[j];
            }
        }
    }

    let mut mnemonics = Vec::with_capacity(k);
    let mut tcodes = Vec::with_capacity(k);
    for i in 0..k {
        let (name, code) = match NAMED.get(i) {
            Some(&(n, c)) => (n.to_string(), c),
            None => (format!("SER{:03}", i + 1), GENERIC_TCODES[i % GENERIC_TCODES.len()]),
        };
        mnemonics.push(name);
        tcodes.push(Tcode::from_code(code).unwrap());
    }

    let mut values = DMatrix::from_element(t, k, MISSING);
    for (i, tcode) in tcodes.iter().enumerate() {
        let loadings: Vec<f64> = (0..r).map(|_| normal(&mut rng)).collect();
        let idio_rho = 0.2 + 0.5 * rng.random::<f64>();
        let idio_scale = 0.5 + rng.random::<f64>();
        // the stationary driver, unit-ish scale
        let mut idio = 0.0;
        let mut driver = Vec::with_capacity(t);
        for row in 0..t {
            idio = idio_rho * idio + normal(&mut rng);
            let common: f64 = (0..r).map(|j| loadings[j] * factors[(row, j)]).sum();
            driver.push((common + idio_scale * idio) / (r as f64).sqrt());
        }
        let series = integrate(&driver, *tcode);
        for (row, v) in series.into_iter().enumerate() {
            values[(row, i)] = v;
        }
    }
    if cfg.late_series && k > 0 {
        for row in 0..t.min(24) {
            values[(row, k - 1)] = MISSING;
        }
    }

    RawPanel { dates: (0..t).map(|i| cfg.start.offset(i as i32)).collect(), values, mnemonics, tcodes }
}

/// Turn a stationary driver into levels whose tcode transform is stationary.
fn integrate(driver: &[f64], tcode: Tcode) -> Vec<f64> {
    let cumsum = |x: &[f64], start: f64| -> Vec<f64> {
        let mut acc = start;
        x.iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    };
    match tcode {
        Tcode::Level => driver.iter().map(|d| 40.0 + d).collect(),
        Tcode::Diff => {
            // mean-reverting level, e.g. a rate
            let mut level = 6.0;
            driver
                .iter()
                .map(|d| {
                    level = 6.0 + 0.985 * (level - 6.0) + 0.15 * d;
                    level
                })
                .collect()
        }
        Tcode::Diff2 => {
            let slope: Vec<f64> = driver.iter().map(|d| 0.5 + 0.05 * d).collect();
            cumsum(&cumsum(&slope, 0.0), 100.0)
        }
        Tcode::Log => driver.iter().map(|d| (5.0 + 0.2 * d).exp()).collect(),
        Tcode::LogDiff => {
            let growth: Vec<f64> = driver.iter().map(|d| 0.002 + 0.006 * d).collect();
            cumsum(&growth, 100f64.ln()).into_iter().map(f64::exp).collect()
        }
        Tcode::LogDiff2 => {
            let mut inflation = 0.003;
            let growth: Vec<f64> = driver
                .iter()
                .map(|d| {
                    inflation = 0.003 + 0.95 * (inflation - 0.003) + 0.0008 * d;
                    inflation
                })
                .collect();
            cumsum(&growth, 30f64.ln()).into_iter().map(f64::exp).collect()
        }
        Tcode::PctChangeDiff => {
            let mut level = 50.0;
            let mut growth = 0.004;
            driver
                .iter()
                .map(|d| {
                    growth = 0.004 + 0.9 * (growth - 0.004) + 0.002 * d;
                    level *= 1.0 + growth;
                    level
                })
                .collect()
        }
    }
}

/// Render a raw panel in FRED-MD CSV layout.
pub fn to_fredmd_csv(panel: &RawPanel) -> String {
    let mut out = String::from("sasdate");
    for m in &panel.mnemonics {
        out.push(',');
        out.push_str(m);
    }
    out.push_str("\nTransform:");
    for t in &panel.tcodes {
        let _ = write!(out, ",{}", t.code());
    }
    out.push('\n');
    for (i, d) in panel.dates.iter().enumerate() {
        let _ = write!(out, "{}/1/{}", d.month(), d.year());
        for j in 0..panel.n_series() {
            let v = panel.values[(i, j)];
            if v.is_nan() {
                out.push(',');
            } else {
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredmd::{parse_fredmd, stationarize};

    #[test]
    fn deterministic_under_seed() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(to_fredmd_csv(&a), to_fredmd_csv(&b));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cfg = SyntheticConfig { n_series: 10, ..Default::default() };
        let p = generate(&cfg);
        let back = parse_fredmd(to_fredmd_csv(&p).as_bytes()).unwrap();
        assert_eq!(back.mnemonics, p.mnemonics);
        assert_eq!(back.tcodes, p.tcodes);
        for (a, b) in back.values.iter().zip(p.values.iter()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn stationarizes_cleanly() {
        let p = generate(&SyntheticConfig { n_series: 30, ..Default::default() });
        let x = stationarize(&p).unwrap();
        assert_eq!(x.values.ncols(), 30);
        assert!(p.column_index("INDPRO").is_some());
        assert!(p.column_index("UNRATE").is_some());
        assert!(p.column_index("CPIAUCSL").is_some());
    }
}
