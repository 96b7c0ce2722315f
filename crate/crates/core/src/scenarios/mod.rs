//! Scenario harness: named presets, config files, multi-seed batch runs with
//! per-seed artifacts (time-series CSV, cross-section CSVs, growth-rate CSV,
//! summary JSON) and parameter sweeps.
//!
//! Every run is a pure function of (config, seed): seeds run share-nothing and
//! may execute in parallel, and repeated invocations produce byte-identical
//! files.

mod config;
pub mod output;

pub use config::{
    apply_key, apply_override, load_config, preset, presets, ConfigError, Preset, ScenarioConfig,
    CONFIG_KEYS, PRESET_NAMES,
};

use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Economy, SimError};
use crate::stats::{self, DistributionFit, FirmCrossSection, TentFit, TimeSeriesRow};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Validation(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("conservation audit failed for seed {seed} at iteration {t}; diagnostic at {}", path.display())]
    AuditFailure { seed: u64, t: u64, path: PathBuf },
    #[error("axis `{0}` is not sweepable; choose one of: interest_rate, gamma, nu, mu_min, mu_max")]
    BadAxis(String),
}

/// One survivor growth observation: sizes of the same firm at two iterations
/// `growth_lag` apart, both inside the steady-state window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub t_from: u64,
    pub firm_id: u64,
    pub size_from: u64,
    pub size_to: u64,
    /// log(size_to / size_from)
    pub growth: f64,
}

/// Post-burn-in means and variances of the aggregate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateStats {
    pub window_start: usize,
    pub window_len: usize,
    pub unemployment_mean: f64,
    pub unemployment_variance: f64,
    pub n_firms_mean: f64,
    pub aggregate_debt_mean: f64,
    /// Mean of (bankruptcy job losses / employed) per iteration.
    pub job_loss_rate_mean: f64,
    pub mu_eff_mean: f64,
    pub n_bankruptcies: u64,
    /// Mean number of active iterations of firms that failed in the window.
    pub mean_lifetime: Option<f64>,
}

/// Tail fit of one cross-section's size distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFit {
    pub t: u64,
    pub n_firms: usize,
    /// Firms with positive size.
    pub n_sizes: usize,
    pub x_min: Option<f64>,
    pub powerlaw: Option<DistributionFit>,
    pub error: Option<String>,
}

/// Statistics of the pooled survivor growth sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthStats {
    pub n_samples: usize,
    pub tent: Option<TentFit>,
    pub tent_error: Option<String>,
    /// Pearson correlation of log size with subsequent growth.
    pub size_growth_correlation: Option<f64>,
    /// Growth-rate standard deviation among the smallest quarter of firms.
    pub bottom_quartile_sd: Option<f64>,
    /// Growth-rate standard deviation among the largest quarter of firms.
    pub top_quartile_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSummary {
    pub loans_outstanding: f64,
    pub interest_income_cum: f64,
    pub write_offs_cum: f64,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsSummary {
    /// One fit per configured snapshot time.
    pub snapshots: Vec<SnapshotFit>,
    /// Fit of the end-of-run cross-section.
    pub end: SnapshotFit,
    pub tent_shaped: Option<bool>,
    pub size_growth_negative: Option<bool>,
}

/// Everything the summary JSON of one seed contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub steady_state: SteadyStateStats,
    pub fits: FitsSummary,
    pub growth: GrowthStats,
    pub bank: BankSummary,
}

/// In-memory result of one seed's run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub summary: SeedSummary,
    pub rows: Vec<TimeSeriesRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub seeds: Vec<SeedOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSeedStat {
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over seeds divided by the mean.
    pub coefficient_of_variation: f64,
}

fn cross_seed(values: Vec<f64>) -> CrossSeedStat {
    let mean = stats::mean(&values);
    let sd = stats::population_variance(&values).sqrt();
    CrossSeedStat {
        per_seed: values,
        mean,
        coefficient_of_variation: if mean != 0.0 { sd / mean } else { f64::NAN },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedSummary {
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub unemployment_mean: CrossSeedStat,
    pub n_firms_mean: CrossSeedStat,
    pub aggregate_debt_mean: CrossSeedStat,
    pub job_loss_rate_mean: CrossSeedStat,
}

pub fn timeseries_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("timeseries_seed{seed}.csv"))
}

pub fn cross_section_path(dir: &Path, seed: u64, t: u64) -> PathBuf {
    dir.join(format!("cross_section_seed{seed}_t{t}.csv"))
}

pub fn growth_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("growth_rates_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("summary_seed{seed}.json"))
}

pub fn combined_summary_path(dir: &Path) -> PathBuf {
    dir.join("summary_combined.json")
}

/// Extracts the snapshot time from a `..._t<T>.csv` file name.
pub fn snapshot_time_from_filename(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let idx = stem.rfind("_t")?;
    stem[idx + 2..].parse().ok()
}

/// Runs every seed of the scenario, writes all artifacts, and returns the
/// in-memory outcomes. Seeds execute in parallel and are fully independent; a
/// conservation-audit failure aborts the affected seed with a diagnostic file
/// and fails the scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| ScenarioError::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    let results: Vec<Result<SeedOutcome, ScenarioError>> = config
        .seeds
        .par_iter()
        .map(|&seed| run_one_seed(config, seed))
        .collect();
    let mut seeds = Vec::with_capacity(results.len());
    for r in results {
        seeds.push(r?);
    }

    let combined = CombinedSummary {
        config: config.clone(),
        seeds: config.seeds.clone(),
        unemployment_mean: cross_seed(
            seeds.iter().map(|s| s.summary.steady_state.unemployment_mean).collect(),
        ),
        n_firms_mean: cross_seed(
            seeds.iter().map(|s| s.summary.steady_state.n_firms_mean).collect(),
        ),
        aggregate_debt_mean: cross_seed(
            seeds.iter().map(|s| s.summary.steady_state.aggregate_debt_mean).collect(),
        ),
        job_loss_rate_mean: cross_seed(
            seeds.iter().map(|s| s.summary.steady_state.job_loss_rate_mean).collect(),
        ),
    };
    output::write_json(&combined_summary_path(&config.output_dir), &combined)?;

    Ok(ScenarioOutcome {
        config: config.clone(),
        seeds,
    })
}

fn join_growth(
    earlier: &[(u64, u64)],
    later: &[(u64, u64)],
    t_from: u64,
    out: &mut Vec<GrowthRecord>,
) {
    let mut j = 0usize;
    for &(id, size_from) in earlier {
        while j < later.len() && later[j].0 < id {
            j += 1;
        }
        if j < later.len() && later[j].0 == id && size_from > 0 && later[j].1 > 0 {
            out.push(GrowthRecord {
                t_from,
                firm_id: id,
                size_from,
                size_to: later[j].1,
                growth: (later[j].1 as f64 / size_from as f64).ln(),
            });
        }
    }
}

fn run_one_seed(config: &ScenarioConfig, seed: u64) -> Result<SeedOutcome, ScenarioError> {
    let mut params = config.params.clone();
    params.seed = seed;
    let iterations = params.iterations;
    let burn_in = config.burn_in;
    let lag = config.growth_lag;
    let dir = &config.output_dir;

    let mut economy = match Economy::new(params) {
        Ok(e) => e,
        Err(e) => return Err(ScenarioError::Validation(e.to_string())),
    };

    let mut rows: Vec<TimeSeriesRow> = Vec::with_capacity(iterations);
    let mut size_window: VecDeque<Vec<(u64, u64)>> = VecDeque::with_capacity(lag + 1);
    let mut growth_records: Vec<GrowthRecord> = Vec::new();
    let mut lifetimes: Vec<u64> = Vec::new();
    let mut snapshots: Vec<FirmCrossSection> = Vec::new();

    for tau in 0..iterations {
        let row = match economy.advance() {
            Ok(row) => row,
            Err(SimError::AuditFailure(report)) => {
                let path = dir.join(format!("audit_failure_seed{seed}.txt"));
                let mut body = String::new();
                body.push_str(&format!(
                    "conservation audit failed\nseed: {seed}\niteration: {}\nresidual: {:e}\ngross_flow: {:e}\n",
                    report.t, report.residual, report.gross_flow
                ));
                std::fs::File::create(&path)
                    .and_then(|mut f| f.write_all(body.as_bytes()))
                    .map_err(|source| ScenarioError::Io {
                        path: path.clone(),
                        source,
                    })?;
                return Err(ScenarioError::AuditFailure {
                    seed,
                    t: report.t,
                    path,
                });
            }
            Err(e) => return Err(ScenarioError::Validation(e.to_string())),
        };
        rows.push(row);

        if tau >= burn_in {
            lifetimes.extend(economy.events.bankruptcy_ages.iter().copied());
            let snap: Vec<(u64, u64)> = economy
                .firms
                .iter()
                .map(|f| (f.id.0, f.n_workers))
                .collect();
            size_window.push_back(snap);
            if size_window.len() > lag {
                let earlier = size_window.pop_front().expect("window non-empty");
                let later = size_window.back().expect("window non-empty");
                join_growth(&earlier, later, (tau - lag) as u64, &mut growth_records);
            }
        }
        if config.snapshot_times.contains(&economy.t) {
            snapshots.push(stats::cross_section(&economy));
        }
    }
    let end_cross = stats::cross_section(&economy);

    // artifacts
    output::write_timeseries_csv(&timeseries_path(dir, seed), &rows)?;
    for cross in &snapshots {
        output::write_cross_section_csv(&cross_section_path(dir, seed, cross.t), cross)?;
    }
    if !config.snapshot_times.contains(&end_cross.t) {
        output::write_cross_section_csv(&cross_section_path(dir, seed, end_cross.t), &end_cross)?;
    }
    output::write_growth_csv(&growth_path(dir, seed), &growth_records)?;

    let steady_state = window_stats(&rows, burn_in, config.params.n_workers, &lifetimes);
    let growth = compute_growth_stats(&growth_records);
    let snapshot_fits: Vec<SnapshotFit> = snapshots
        .iter()
        .map(|c| fit_sizes(c, config.powerlaw_xmin_quantile))
        .collect();
    let end_fit = fit_sizes(&end_cross, config.powerlaw_xmin_quantile);
    let fits = FitsSummary {
        snapshots: snapshot_fits,
        end: end_fit,
        tent_shaped: growth.tent.as_ref().map(|t| t.tent_shaped),
        size_growth_negative: growth.size_growth_correlation.map(|c| c < 0.0),
    };
    let bank = BankSummary {
        loans_outstanding: economy.bank.loans_outstanding,
        interest_income_cum: economy.bank.interest_income_cum,
        write_offs_cum: economy.bank.write_offs_cum,
        equity: economy.bank.equity(),
    };
    let summary = SeedSummary {
        seed,
        config: config.clone(),
        steady_state,
        fits,
        growth,
        bank,
    };
    output::write_json(&summary_path(dir, seed), &summary)?;

    Ok(SeedOutcome { summary, rows })
}

/// Post-burn-in statistics of a row series.
pub fn window_stats(
    rows: &[TimeSeriesRow],
    burn_in: usize,
    n_workers: usize,
    lifetimes: &[u64],
) -> SteadyStateStats {
    let window = &rows[burn_in.min(rows.len())..];
    let unemployment: Vec<f64> = window.iter().map(|r| r.unemployment_rate).collect();
    let firms: Vec<f64> = window.iter().map(|r| r.n_active_firms as f64).collect();
    let debt: Vec<f64> = window.iter().map(|r| r.aggregate_debt).collect();
    let mu_eff: Vec<f64> = window.iter().map(|r| r.mu_eff).collect();
    let loss_rates: Vec<f64> = window
        .iter()
        .filter_map(|r| {
            let employed = ((1.0 - r.unemployment_rate) * n_workers as f64).round();
            if employed > 0.0 {
                Some(r.job_losses_bankruptcy as f64 / employed)
            } else {
                None
            }
        })
        .collect();
    SteadyStateStats {
        window_start: burn_in,
        window_len: window.len(),
        unemployment_mean: stats::mean(&unemployment),
        unemployment_variance: stats::population_variance(&unemployment),
        n_firms_mean: stats::mean(&firms),
        aggregate_debt_mean: stats::mean(&debt),
        job_loss_rate_mean: stats::mean(&loss_rates),
        mu_eff_mean: stats::mean(&mu_eff),
        n_bankruptcies: window.iter().map(|r| r.n_bankruptcies as u64).sum(),
        mean_lifetime: if lifetimes.is_empty() {
            None
        } else {
            Some(lifetimes.iter().sum::<u64>() as f64 / lifetimes.len() as f64)
        },
    }
}

/// Tail fit of a cross-section's size distribution above the configured
/// quantile cutoff.
pub fn fit_sizes(cross: &FirmCrossSection, xmin_quantile: f64) -> SnapshotFit {
    let sizes: Vec<f64> = cross
        .rows
        .iter()
        .filter(|r| r.size > 0)
        .map(|r| r.size as f64)
        .collect();
    let base = SnapshotFit {
        t: cross.t,
        n_firms: cross.rows.len(),
        n_sizes: sizes.len(),
        x_min: None,
        powerlaw: None,
        error: None,
    };
    let Some(x_min) = stats::quantile(&sizes, xmin_quantile) else {
        return SnapshotFit {
            error: Some("no firms with positive size".to_string()),
            ..base
        };
    };
    match stats::fit_powerlaw_ccdf(&sizes, x_min) {
        Ok(fit) => SnapshotFit {
            x_min: Some(x_min),
            powerlaw: Some(fit),
            ..base
        },
        Err(e) => SnapshotFit {
            x_min: Some(x_min),
            error: Some(e.to_string()),
            ..base
        },
    }
}

/// Tent fit, size-growth correlation and size-conditioned growth widths of a
/// pooled growth sample. Used both by runs and by `analyze` on saved files.
pub fn compute_growth_stats(records: &[GrowthRecord]) -> GrowthStats {
    let growth: Vec<f64> = records.iter().map(|r| r.growth).collect();
    let (tent, tent_error) = match stats::fit_tent(&growth) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let log_sizes: Vec<f64> = records.iter().map(|r| (r.size_from as f64).ln()).collect();
    let size_growth_correlation = stats::correlation(&log_sizes, &growth);

    let mut by_size: Vec<&GrowthRecord> = records.iter().collect();
    by_size.sort_by(|a, b| {
        (a.size_from, a.t_from, a.firm_id).cmp(&(b.size_from, b.t_from, b.firm_id))
    });
    let quarter = by_size.len() / 4;
    let (bottom_quartile_sd, top_quartile_sd) = if quarter >= 2 {
        let bottom: Vec<f64> = by_size[..quarter].iter().map(|r| r.growth).collect();
        let top: Vec<f64> = by_size[by_size.len() - quarter..]
            .iter()
            .map(|r| r.growth)
            .collect();
        (
            Some(stats::population_variance(&bottom).sqrt()),
            Some(stats::population_variance(&top).sqrt()),
        )
    } else {
        (None, None)
    };
    GrowthStats {
        n_samples: records.len(),
        tent,
        tent_error,
        size_growth_correlation,
        bottom_quartile_sd,
        top_quartile_sd,
    }
}

/// Recomputes the size-distribution fit from a saved cross-section CSV.
pub fn analyze_cross_section(path: &Path, xmin_quantile: f64) -> Result<SnapshotFit, ScenarioError> {
    let t = snapshot_time_from_filename(path).unwrap_or(0);
    let cross = output::read_cross_section_csv(path, t)?;
    Ok(fit_sizes(&cross, xmin_quantile))
}

/// Recomputes growth statistics from a saved growth-rate CSV.
pub fn analyze_growth_file(path: &Path) -> Result<GrowthStats, ScenarioError> {
    let records = output::read_growth_csv(path)?;
    Ok(compute_growth_stats(&records))
}

/// Growth statistics between two saved cross-sections.
pub fn analyze_snapshot_growth(
    earlier: &Path,
    later: &Path,
) -> Result<GrowthStats, ScenarioError> {
    let a = output::read_cross_section_csv(earlier, snapshot_time_from_filename(earlier).unwrap_or(0))?;
    let b = output::read_cross_section_csv(later, snapshot_time_from_filename(later).unwrap_or(1))?;
    let mut records = Vec::new();
    let mut j = 0usize;
    for ra in &a.rows {
        while j < b.rows.len() && b.rows[j].id < ra.id {
            j += 1;
        }
        if j < b.rows.len() && b.rows[j].id == ra.id && ra.size > 0 && b.rows[j].size > 0 {
            records.push(GrowthRecord {
                t_from: a.t,
                firm_id: ra.id,
                size_from: ra.size,
                size_to: b.rows[j].size,
                growth: (b.rows[j].size as f64 / ra.size as f64).ln(),
            });
        }
    }
    Ok(compute_growth_stats(&records))
}

pub const SWEEP_AXES: [&str; 5] = ["interest_rate", "gamma", "nu", "mu_min", "mu_max"];

/// One (value, seed) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    pub unemployment_mean: f64,
    pub unemployment_variance: f64,
    pub n_firms_mean: f64,
    pub aggregate_debt_mean: f64,
    pub job_loss_rate_mean: f64,
    pub mean_lifetime: Option<f64>,
}

/// Cross-seed means for one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeanRow {
    pub axis: String,
    pub value: f64,
    pub unemployment_mean: f64,
    pub n_firms_mean: f64,
    pub aggregate_debt_mean: f64,
    pub job_loss_rate_mean: f64,
    pub mean_lifetime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub means: Vec<SweepMeanRow>,
}

fn set_axis(config: &mut ScenarioConfig, axis: &str, value: f64) -> Result<(), ScenarioError> {
    match axis {
        "interest_rate" => config.params.interest_rate = value,
        "gamma" => config.params.gamma = value,
        "nu" => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(ScenarioError::Validation(format!(
                    "nu must be a non-negative integer, got {value}"
                )));
            }
            config.params.nu = value as usize;
        }
        "mu_min" => config.params.mu_min = value,
        "mu_max" => config.params.mu_max = value,
        other => return Err(ScenarioError::BadAxis(other.to_string())),
    }
    Ok(())
}

/// Runs the base scenario once per axis value (all seeds each), writing one
/// summary CSV keyed by (value, seed) and one of cross-seed means.
pub fn run_sweep(
    base: &ScenarioConfig,
    axis: &str,
    values: &[f64],
) -> Result<SweepOutcome, ScenarioError> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(ScenarioError::BadAxis(axis.to_string()));
    }
    if values.is_empty() {
        return Err(ScenarioError::Validation("sweep needs at least one value".into()));
    }
    std::fs::create_dir_all(&base.output_dir).map_err(|source| ScenarioError::Io {
        path: base.output_dir.clone(),
        source,
    })?;

    let mut rows: Vec<SweepRow> = Vec::new();
    let mut means: Vec<SweepMeanRow> = Vec::new();
    for &value in values {
        let mut config = base.clone();
        set_axis(&mut config, axis, value)?;
        config.output_dir = base.output_dir.join(format!("{axis}_{value}"));
        config.validate()?;
        let outcome = run_scenario(&config)?;
        let cell_rows: Vec<SweepRow> = outcome
            .seeds
            .iter()
            .map(|s| SweepRow {
                axis: axis.to_string(),
                value,
                seed: s.summary.seed,
                unemployment_mean: s.summary.steady_state.unemployment_mean,
                unemployment_variance: s.summary.steady_state.unemployment_variance,
                n_firms_mean: s.summary.steady_state.n_firms_mean,
                aggregate_debt_mean: s.summary.steady_state.aggregate_debt_mean,
                job_loss_rate_mean: s.summary.steady_state.job_loss_rate_mean,
                mean_lifetime: s.summary.steady_state.mean_lifetime,
            })
            .collect();
        let lifetime_values: Vec<f64> = cell_rows.iter().filter_map(|r| r.mean_lifetime).collect();
        means.push(SweepMeanRow {
            axis: axis.to_string(),
            value,
            unemployment_mean: stats::mean(
                &cell_rows.iter().map(|r| r.unemployment_mean).collect::<Vec<_>>(),
            ),
            n_firms_mean: stats::mean(
                &cell_rows.iter().map(|r| r.n_firms_mean).collect::<Vec<_>>(),
            ),
            aggregate_debt_mean: stats::mean(
                &cell_rows.iter().map(|r| r.aggregate_debt_mean).collect::<Vec<_>>(),
            ),
            job_loss_rate_mean: stats::mean(
                &cell_rows.iter().map(|r| r.job_loss_rate_mean).collect::<Vec<_>>(),
            ),
            mean_lifetime: if lifetime_values.is_empty() {
                None
            } else {
                Some(stats::mean(&lifetime_values))
            },
        });
        rows.extend(cell_rows);
    }

    write_sweep_csv(&base.output_dir.join(format!("sweep_{axis}.csv")), &rows)?;
    write_sweep_means_csv(&base.output_dir.join(format!("sweep_{axis}_means.csv")), &means)?;
    Ok(SweepOutcome { rows, means })
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), ScenarioError> {
    let file = std::fs::File::create(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let err = |source: csv::Error| ScenarioError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(source),
    };
    w.write_record([
        "axis",
        "value",
        "seed",
        "unemployment_mean",
        "unemployment_variance",
        "n_firms_mean",
        "aggregate_debt_mean",
        "job_loss_rate_mean",
        "mean_lifetime",
    ])
    .map_err(err)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            output::fmt_float(r.value),
            r.seed.to_string(),
            output::fmt_float(r.unemployment_mean),
            output::fmt_float(r.unemployment_variance),
            output::fmt_float(r.n_firms_mean),
            output::fmt_float(r.aggregate_debt_mean),
            output::fmt_float(r.job_loss_rate_mean),
            output::fmt_float(r.mean_lifetime.unwrap_or(f64::NAN)),
        ])
        .map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(source),
        })?;
    }
    w.flush().map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_sweep_means_csv(path: &Path, rows: &[SweepMeanRow]) -> Result<(), ScenarioError> {
    let file = std::fs::File::create(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let err = |source: csv::Error| ScenarioError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(source),
    };
    w.write_record([
        "axis",
        "value",
        "unemployment_mean",
        "n_firms_mean",
        "aggregate_debt_mean",
        "job_loss_rate_mean",
        "mean_lifetime",
    ])
    .map_err(err)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            output::fmt_float(r.value),
            output::fmt_float(r.unemployment_mean),
            output::fmt_float(r.n_firms_mean),
            output::fmt_float(r.aggregate_debt_mean),
            output::fmt_float(r.job_loss_rate_mean),
            output::fmt_float(r.mean_lifetime.unwrap_or(f64::NAN)),
        ])
        .map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(source),
        })?;
    }
    w.flush().map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}
