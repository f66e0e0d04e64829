use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EvalError, SpecId};
use crate::date::YearMonth;
use crate::features::BlockKind;
use crate::harness::ForecastRecord;

/// Pseudo-R² of one forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Observation {
    pub target: String,
    pub horizon: usize,
    pub origin: YearMonth,
    pub spec: SpecId,
    pub r2: f64,
}

/// Pseudo-R² of every successful forecast in a store.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct R2Panel {
    pub observations: Vec<R2Observation>,
}

impl R2Panel {
    /// `R² = 1 − e² / σ²`, where `σ²` is the variance (divided by `T`) of
    /// the realized target over all origins of its `(target, horizon)`.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ForecastRecord>) -> Result<Self, EvalError> {
        let ok: Vec<&ForecastRecord> = records.into_iter().filter(|r| r.is_success() && r.realized.is_some()).collect();
        let mut realized: BTreeMap<(&str, usize), BTreeMap<YearMonth, f64>> = BTreeMap::new();
        for r in &ok {
            realized.entry((r.target.as_str(), r.horizon)).or_default().insert(r.origin, r.realized.expect("filtered"));
        }
        let mut variance = BTreeMap::new();
        for (key, ys) in &realized {
            let n = ys.len() as f64;
            let mean = ys.values().sum::<f64>() / n;
            let v = ys.values().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
            if !(v > 0.0) {
                return Err(EvalError::Invalid(format!("{} h={} has no realized variance", key.0, key.1)));
            }
            variance.insert(*key, v);
        }
        let observations = ok
            .iter()
            .map(|r| {
                let e = r.realized.expect("filtered") - r.forecast.expect("success");
                R2Observation {
                    target: r.target.clone(),
                    horizon: r.horizon,
                    origin: r.origin,
                    spec: SpecId::new(r.model, r.featureset),
                    r2: 1.0 - e * e / variance[&(r.target.as_str(), r.horizon)],
                }
            })
            .collect();
        Ok(R2Panel { observations })
    }
}

/// Estimated marginal effect of adding one feature block. `target` and
/// `horizon` are `None` for the regression pooled over all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffect {
    pub feature: BlockKind,
    pub target: Option<String>,
    pub horizon: Option<usize>,
    pub alpha: Option<f64>,
    pub se: Option<f64>,
    /// 95% band.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub n_obs: usize,
    /// Specifications in the comparison set.
    pub n_specs: usize,
    /// No pair of specifications differs by `feature` alone.
    pub unidentified: bool,
}

/// `⌊1.3 √T⌋`.
pub fn panel_hac_lags(t: usize) -> usize {
    (1.3 * (t as f64).sqrt()).floor() as usize
}

/// Specifications that have a partner in `specs` differing only by `f`.
fn comparison_set(specs: &BTreeSet<SpecId>, f: BlockKind) -> BTreeSet<SpecId> {
    let mut out = BTreeSet::new();
    for s in specs {
        if s.featureset.contains(f) {
            let partner = SpecId::new(s.model, s.featureset.without(f));
            if specs.contains(&partner) {
                out.insert(*s);
                out.insert(partner);
            }
        }
    }
    out
}

/// Regresses pseudo-R² on a dummy for `f` with `(origin, target, horizon)`
/// fixed effects, using only specifications paired by `f`. Standard errors
/// are Driscoll-Kraay: Bartlett HAC with [`panel_hac_lags`] over the
/// origin-level scores. Returns the pooled estimate first, then one per
/// `(target, horizon)`.
pub fn marginal_effects(panel: &R2Panel, f: BlockKind) -> Vec<MarginalEffect> {
    let mut out = vec![estimate(&panel.observations.iter().collect::<Vec<_>>(), f, None, None)];
    let mut cells: BTreeMap<(&str, usize), Vec<&R2Observation>> = BTreeMap::new();
    for o in &panel.observations {
        cells.entry((o.target.as_str(), o.horizon)).or_default().push(o);
    }
    for ((target, h), obs) in cells {
        out.push(estimate(&obs, f, Some(target.to_string()), Some(h)));
    }
    out
}

fn estimate(obs: &[&R2Observation], f: BlockKind, target: Option<String>, horizon: Option<usize>) -> MarginalEffect {
    let mut effect = MarginalEffect {
        feature: f,
        target,
        horizon,
        alpha: None,
        se: None,
        lower: None,
        upper: None,
        n_obs: 0,
        n_specs: 0,
        unidentified: true,
    };
    // comparison sets are formed within each (target, horizon)
    let mut specs_by_cell: BTreeMap<(&str, usize), BTreeSet<SpecId>> = BTreeMap::new();
    for o in obs {
        specs_by_cell.entry((o.target.as_str(), o.horizon)).or_default().insert(o.spec);
    }
    let sets: BTreeMap<(&str, usize), BTreeSet<SpecId>> =
        specs_by_cell.into_iter().map(|(k, s)| (k, comparison_set(&s, f))).collect();
    let mut groups: BTreeMap<(YearMonth, &str, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for o in obs {
        if sets[&(o.target.as_str(), o.horizon)].contains(&o.spec) {
            let d = if o.spec.featureset.contains(f) { 1.0 } else { 0.0 };
            groups.entry((o.origin, o.target.as_str(), o.horizon)).or_default().push((d, o.r2));
        }
    }
    effect.n_specs = sets.values().map(|s| s.len()).sum();
    effect.n_obs = groups.values().map(|g| g.len()).sum();

    let mut within: Vec<(YearMonth, f64, f64)> = Vec::with_capacity(effect.n_obs);
    for ((origin, _, _), g) in &groups {
        let n = g.len() as f64;
        let dm = g.iter().map(|p| p.0).sum::<f64>() / n;
        let ym = g.iter().map(|p| p.1).sum::<f64>() / n;
        within.extend(g.iter().map(|&(d, y)| (*origin, d - dm, y - ym)));
    }
    let sxx: f64 = within.iter().map(|w| w.1 * w.1).sum();
    if !(sxx > 0.0) {
        return effect;
    }
    let alpha = within.iter().map(|w| w.1 * w.2).sum::<f64>() / sxx;

    let mut scores: BTreeMap<YearMonth, f64> = BTreeMap::new();
    for &(t, x, y) in &within {
        *scores.entry(t).or_default() += x * (y - alpha * x);
    }
    let s: Vec<f64> = scores.into_values().collect();
    let lags = panel_hac_lags(s.len());
    let gamma = |j: usize| s[j..].iter().zip(&s).map(|(a, b)| a * b).sum::<f64>();
    let mut meat = gamma(0);
    for j in 1..=lags.min(s.len().saturating_sub(1)) {
        meat += 2.0 * (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma(j);
    }
    let se = meat.max(0.0).sqrt() / sxx;
    let z = 1.959_963_984_540_054;
    effect.alpha = Some(alpha);
    effect.se = Some(se);
    effect.lower = Some(alpha - z * se);
    effect.upper = Some(alpha + z * se);
    effect.unidentified = false;
    effect
}
