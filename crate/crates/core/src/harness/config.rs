use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::date::YearMonth;
use crate::features::{BlockSet, FeatureConfig, DEFAULT_FEATURESETS};
use crate::models::ModelFamily;
use crate::tuning::TuningPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config check failed: {0}")]
    Invalid(String),
}

/// Estimation window scheme. Only the expanding window is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    #[default]
    Expanding,
    Rolling,
}

/// Declarative description of a forecasting experiment. Serialized as flat
/// TOML: feature and tuning settings sit at the top level next to the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub targets: Vec<String>,
    pub horizons: Vec<usize>,
    pub models: Vec<ModelFamily>,
    /// Feature sets for the families that take one. AR always uses the
    /// empty set and FM always uses `F`.
    pub featuresets: Vec<BlockSet>,
    pub train_start: YearMonth,
    pub poos_start: YearMonth,
    pub poos_end: YearMonth,
    pub window: WindowMode,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    /// Fraction of cells that must succeed for a run to count as complete.
    pub min_completion: f64,
    #[serde(flatten)]
    pub features: FeatureConfig,
    #[serde(flatten)]
    pub tuning: TuningPolicy,
}

/// Keys that are absent from a serialized default config because their
/// default is "unset".
const OPTIONAL_KEYS: &[&str] = &["data", "mutation_rate"];

/// Keys that do not change results and are left out of the config hash.
const UNHASHED_KEYS: &[&str] = &["workers", "data", "min_completion"];

pub const DEFAULT_TARGETS: [&str; 10] =
    ["INDPRO", "EMP", "UNRATE", "INCOME", "CONS", "RETAIL", "HOUST", "M2", "CPI", "PPI"];

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ym = |y, m| YearMonth::new(y, m).expect("valid month");
        ExperimentConfig {
            targets: DEFAULT_TARGETS.iter().map(|s| s.to_string()).collect(),
            horizons: vec![1, 3, 6, 9, 12, 24],
            models: ModelFamily::ALL.to_vec(),
            featuresets: DEFAULT_FEATURESETS.iter().map(|s| s.parse().expect("canonical set")).collect(),
            train_start: ym(1960, 1),
            poos_start: ym(1980, 1),
            poos_end: ym(2017, 12),
            window: WindowMode::Expanding,
            seed: 20200101,
            workers: 0,
            data: None,
            min_completion: 1.0,
            features: FeatureConfig::default(),
            tuning: TuningPolicy::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let known = known_keys();
        if let Some(bad) = table.keys().find(|k| !known.contains(k.as_str())) {
            return Err(ConfigError::UnknownKey(bad.clone()));
        }
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Months of history consumed before the first usable feature row: the
    /// deepest lag plus one month for the target's first difference.
    pub fn lag_depth(&self) -> usize {
        let f = &self.features;
        [f.y_lags, f.factor_lags, f.x_lags, f.marx_order.saturating_sub(1), f.maf_lags, f.level_lags]
            .into_iter()
            .max()
            .unwrap_or(0)
            + 1
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if self.window != WindowMode::Expanding {
            return fail("only the expanding window is supported".into());
        }
        if self.targets.is_empty() || self.horizons.is_empty() || self.models.is_empty() {
            return fail("targets, horizons and models must be non-empty".into());
        }
        if self.horizons.contains(&0) {
            return fail("horizons must be at least 1".into());
        }
        let needs_sets = self.models.iter().any(|m| !matches!(m, ModelFamily::Ar | ModelFamily::Fm));
        if needs_sets && self.featuresets.is_empty() {
            return fail("featuresets must be non-empty for EN, AL, LB, RF and BT".into());
        }
        if self.poos_start > self.poos_end {
            return fail(format!("poos_start {} after poos_end {}", self.poos_start, self.poos_end));
        }
        let max_h = *self.horizons.iter().max().expect("non-empty");
        let earliest = self.train_start.offset((max_h + self.lag_depth()) as i32);
        if self.poos_start <= earliest {
            return fail(format!(
                "poos_start {} must come after train_start + max horizon + lag depth ({earliest})",
                self.poos_start
            ));
        }
        if !(0.0..=1.0).contains(&self.min_completion) {
            return fail(format!("min_completion {} outside [0, 1]", self.min_completion));
        }
        if self.tuning.refresh_months == 0 {
            return fail("refresh_months must be at least 1".into());
        }
        if self.tuning.budget == 0 {
            return fail("budget must be at least 1".into());
        }
        Ok(())
    }

    fn hashed_value(&self) -> serde_json::Map<String, serde_json::Value> {
        let serde_json::Value::Object(mut map) = serde_json::to_value(self).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        for k in UNHASHED_KEYS {
            map.remove(*k);
        }
        map
    }

    /// SHA-256 of the result-relevant settings.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.hashed_value()).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Result-relevant settings as JSON, for store headers.
    pub fn hashed_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.hashed_value())
    }

    /// Keys whose result-relevant values differ from `stored`.
    pub fn diff_against(&self, stored: &serde_json::Value) -> Vec<ConfigDiff> {
        let mine = self.hashed_value();
        let theirs = stored.as_object().cloned().unwrap_or_default();
        let keys: BTreeSet<&String> = mine.keys().chain(theirs.keys()).collect();
        keys.into_iter()
            .filter(|k| mine.get(*k) != theirs.get(*k))
            .map(|k| ConfigDiff {
                key: k.clone(),
                stored: theirs.get(k).map(|v| v.to_string()),
                requested: mine.get(k).map(|v| v.to_string()),
            })
            .collect()
    }
}

/// One differing key between a stored and a requested config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigDiff {
    pub key: String,
    pub stored: Option<String>,
    pub requested: Option<String>,
}

impl fmt::Display for ConfigDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<String>| v.clone().unwrap_or_else(|| "(unset)".into());
        write!(f, "{}: {} -> {}", self.key, show(&self.stored), show(&self.requested))
    }
}

fn known_keys() -> BTreeSet<String> {
    let value = toml::Value::try_from(ExperimentConfig::default()).expect("default config serializes");
    let mut keys: BTreeSet<String> = value.as_table().expect("table").keys().cloned().collect();
    keys.extend(OPTIONAL_KEYS.iter().map(|s| s.to_string()));
    keys
}
