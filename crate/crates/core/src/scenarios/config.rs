//! Scenario configuration: flat key-value files, named presets, overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimParams;

/// A simulation plus everything the harness needs: steady-state window,
/// snapshot times, seeds, output location and estimator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: SimParams,
    /// Iterations excluded from steady-state statistics.
    pub burn_in: usize,
    /// Cross-sections are written after these many completed iterations.
    pub snapshot_times: Vec<u64>,
    /// One independent run per seed.
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Lag between the snapshots a survivor growth rate compares.
    pub growth_lag: usize,
    /// Size quantile used as the power-law fit cutoff.
    pub powerlaw_xmin_quantile: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            params: SimParams::default(),
            burn_in: 500,
            snapshot_times: Vec::new(),
            seeds: vec![42],
            output_dir: PathBuf::from("out"),
            growth_lag: 1,
            powerlaw_xmin_quantile: 0.9,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        if self.burn_in >= self.params.iterations {
            return Err(ConfigError::Validation(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.params.iterations
            )));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Validation("seeds must not be empty".into()));
        }
        if self.growth_lag == 0 {
            return Err(ConfigError::Validation("growth_lag must be at least 1".into()));
        }
        if !(self.powerlaw_xmin_quantile > 0.0 && self.powerlaw_xmin_quantile < 1.0) {
            return Err(ConfigError::Validation(
                "powerlaw_xmin_quantile must lie strictly between 0 and 1".into(),
            ));
        }
        if let Some(&t) = self
            .snapshot_times
            .iter()
            .find(|&&t| t == 0 || t > self.params.iterations as u64)
        {
            return Err(ConfigError::Validation(format!(
                "snapshot time {t} is outside the run (1..={})",
                self.params.iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{content}`")]
    Parse { line: usize, content: String },
    #[error("line {line}: unknown key `{key}`{suggestion}")]
    UnknownKey {
        line: usize,
        key: String,
        /// Pre-rendered ", did you mean `...`?" or empty.
        suggestion: String,
    },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("unknown preset `{name}`; known presets: {known}")]
    UnknownPreset { name: String, known: String },
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
}

/// Every key a config document or `--override` may set.
pub const CONFIG_KEYS: &[&str] = &[
    "n_workers",
    "n_firms_init",
    "wage",
    "price",
    "interest_rate",
    "gamma",
    "nu",
    "mu_min",
    "mu_max",
    "init_unemployment",
    "init_debt_max",
    "iterations",
    "seed",
    "entry_size_min",
    "entry_size_max",
    "burn_in",
    "snapshot_times",
    "seeds",
    "output_dir",
    "growth_lag",
    "powerlaw_xmin_quantile",
];

const REQUIRED_KEYS: &[&str] = &[
    "n_workers",
    "n_firms_init",
    "interest_rate",
    "nu",
    "mu_min",
    "mu_max",
    "iterations",
];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn suggest_key(unknown: &str) -> String {
    let best = CONFIG_KEYS
        .iter()
        .map(|k| {
            let prefix_related = k.starts_with(unknown) || unknown.starts_with(k);
            let dist = if prefix_related { 0 } else { levenshtein(unknown, k) };
            (dist, *k)
        })
        .min();
    match best {
        Some((dist, key)) if dist <= 3 => format!(", did you mean `{key}`?"),
        _ => String::new(),
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| ConfigError::InvalidValue {
        line,
        key: key.to_string(),
        reason: format!("{e}"),
    })
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<u64>, ConfigError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| parse_value(key, item.trim(), line))
        .collect()
}

/// Sets one configuration key from its textual value. Shared by the file
/// loader and command-line overrides; `line` only feeds error messages.
pub fn apply_key(
    config: &mut ScenarioConfig,
    key: &str,
    value: &str,
    line: usize,
) -> Result<(), ConfigError> {
    let p = &mut config.params;
    match key {
        "n_workers" => p.n_workers = parse_value(key, value, line)?,
        "n_firms_init" => p.n_firms_init = parse_value(key, value, line)?,
        "wage" => p.wage = parse_value(key, value, line)?,
        "price" => p.price = parse_value(key, value, line)?,
        "interest_rate" => p.interest_rate = parse_value(key, value, line)?,
        "gamma" => p.gamma = parse_value(key, value, line)?,
        "nu" => p.nu = parse_value(key, value, line)?,
        "mu_min" => p.mu_min = parse_value(key, value, line)?,
        "mu_max" => p.mu_max = parse_value(key, value, line)?,
        "init_unemployment" => p.init_unemployment = parse_value(key, value, line)?,
        "init_debt_max" => p.init_debt_max = parse_value(key, value, line)?,
        "iterations" => p.iterations = parse_value(key, value, line)?,
        "seed" => p.seed = parse_value(key, value, line)?,
        "entry_size_min" => p.entry_size_min = parse_value(key, value, line)?,
        "entry_size_max" => p.entry_size_max = parse_value(key, value, line)?,
        "burn_in" => config.burn_in = parse_value(key, value, line)?,
        "snapshot_times" => config.snapshot_times = parse_list(key, value, line)?,
        "seeds" => config.seeds = parse_list(key, value, line)?,
        "output_dir" => config.output_dir = PathBuf::from(value),
        "growth_lag" => config.growth_lag = parse_value(key, value, line)?,
        "powerlaw_xmin_quantile" => config.powerlaw_xmin_quantile = parse_value(key, value, line)?,
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
                suggestion: suggest_key(key),
            })
        }
    }
    Ok(())
}

/// Parses a flat `key = value` document. Lines starting with `#` and blank
/// lines are skipped; unknown keys are rejected with a suggestion; omitted
/// optional keys take documented defaults (`init_debt_max` follows `wage`,
/// `seeds` follows `seed`).
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                content: line.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|s| s == key) {
            return Err(ConfigError::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        apply_key(&mut config, key, value, line_no)?;
        seen.push(key.to_string());
    }
    for required in REQUIRED_KEYS {
        if !seen.iter().any(|s| s == required) {
            return Err(ConfigError::MissingKey { key: required });
        }
    }
    if !seen.iter().any(|s| s == "init_debt_max") {
        config.params.init_debt_max = config.params.wage;
    }
    if !seen.iter().any(|s| s == "seeds") {
        config.seeds = vec![config.params.seed];
    }
    config.validate()?;
    Ok(config)
}

/// Parses an `--override key=value` argument against an existing config.
pub fn apply_override(config: &mut ScenarioConfig, kv: &str) -> Result<(), ConfigError> {
    let Some((key, value)) = kv.split_once('=') else {
        return Err(ConfigError::BadOverride(kv.to_string()));
    };
    apply_key(config, key.trim(), value.trim(), 0)
}

pub const PRESET_NAMES: [&str; 4] = [
    "fig2_steady_state",
    "fig3_distributions",
    "fig4a_wide_mu",
    "fig4b_narrow_mu",
];

/// A named, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ScenarioConfig,
}

/// Returns the named preset. Preset names are stable.
pub fn preset(name: &str) -> Result<Preset, ConfigError> {
    let base = ScenarioConfig::default();
    let p = match name {
        "fig2_steady_state" => Preset {
            name: "fig2_steady_state",
            description: "steady state with fluctuations: 10k workers, r=0.011, nu=8, mu in [0, 0.1]",
            config: ScenarioConfig {
                params: SimParams {
                    n_workers: 10_000,
                    n_firms_init: 450,
                    interest_rate: 0.011,
                    nu: 8,
                    mu_min: 0.0,
                    mu_max: 0.1,
                    iterations: 2000,
                    ..SimParams::default()
                },
                output_dir: PathBuf::from("out/fig2_steady_state"),
                ..base
            },
        },
        "fig3_distributions" => Preset {
            name: "fig3_distributions",
            description: "size and growth-rate distributions: 100k workers, r=0.075, nu=4, snapshot at t=750",
            config: ScenarioConfig {
                params: SimParams {
                    n_workers: 100_000,
                    n_firms_init: 450,
                    interest_rate: 0.075,
                    nu: 4,
                    mu_min: 0.0,
                    mu_max: 0.1,
                    iterations: 1500,
                    ..SimParams::default()
                },
                snapshot_times: vec![750],
                output_dir: PathBuf::from("out/fig3_distributions"),
                ..base
            },
        },
        "fig4a_wide_mu" => Preset {
            name: "fig4a_wide_mu",
            description: "unemployment fluctuations with a wide margin range: 100k workers, mu in [0, 0.1]",
            config: ScenarioConfig {
                params: SimParams {
                    n_workers: 100_000,
                    n_firms_init: 450,
                    interest_rate: 0.011,
                    nu: 8,
                    mu_min: 0.0,
                    mu_max: 0.1,
                    iterations: 2000,
                    ..SimParams::default()
                },
                output_dir: PathBuf::from("out/fig4a_wide_mu"),
                ..base
            },
        },
        "fig4b_narrow_mu" => Preset {
            name: "fig4b_narrow_mu",
            description: "same economy with a narrow margin range: mu in [0.025, 0.075]",
            config: ScenarioConfig {
                params: SimParams {
                    n_workers: 100_000,
                    n_firms_init: 450,
                    interest_rate: 0.011,
                    nu: 8,
                    mu_min: 0.025,
                    mu_max: 0.075,
                    iterations: 2000,
                    ..SimParams::default()
                },
                output_dir: PathBuf::from("out/fig4b_narrow_mu"),
                ..base
            },
        },
        other => {
            return Err(ConfigError::UnknownPreset {
                name: other.to_string(),
                known: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(p)
}

/// All presets, for listings.
pub fn presets() -> Vec<Preset> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("static preset"))
        .collect()
}
