//! Observables and estimators: effective margin, growth rates, tail-index and
//! tent-shape fits, moving averages and cross-section snapshots.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Economy;
use crate::ledger::Money;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("series is empty")]
    EmptySeries,
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("values must be positive")]
    NonPositiveValue,
    #[error("bins_per_decade must be at least 1")]
    ZeroBins,
}

/// Aggregate outcome of one iteration; one CSV row per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRow {
    pub t: u64,
    pub unemployment_rate: f64,
    pub n_active_firms: usize,
    pub n_bankruptcies: usize,
    pub job_losses_bankruptcy: u64,
    pub aggregate_debt: Money,
    pub mu_eff: f64,
    pub total_output: u64,
    pub total_demand: u64,
    pub total_sold: u64,
    pub bank_equity: Money,
    pub conservation_residual: Money,
}

/// One alive firm at snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionRow {
    pub id: u64,
    pub age: u64,
    pub mu: f64,
    /// Realized gross margin; `None` when the firm sold nothing.
    pub mu_gross_realized: Option<f64>,
    /// Realized net margin; `None` when the firm sold nothing.
    pub mu_net_realized: Option<f64>,
    pub size: u64,
    pub q_produced: u64,
    pub q_sold: u64,
    pub cash: Money,
    pub debt: Money,
    pub equity: Money,
}

/// Snapshot of all alive firms after `t` completed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmCrossSection {
    pub t: u64,
    pub rows: Vec<CrossSectionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitParams {
    /// Tail index of the complementary cumulative distribution
    /// P(S >= s) ~ s^-exponent; the density exponent is `exponent + 1`.
    PowerlawCcdf { exponent: f64, x_min: f64 },
    Laplace { location: f64, scale: f64 },
    Gaussian { mean: f64, std_dev: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFit {
    #[serde(flatten)]
    pub params: FitParams,
    pub log_likelihood: f64,
    pub n_samples: usize,
}

/// Laplace-vs-Gaussian comparison of a growth-rate sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentFit {
    pub laplace: DistributionFit,
    pub gaussian: DistributionFit,
    pub excess_kurtosis: f64,
    /// The sample looks tent-shaped: the Laplace likelihood wins.
    pub tent_shaped: bool,
}

/// Employment-weighted average margin over alive firms; the average margin at
/// which workers are hired. Zero (with a warning) when nobody is employed.
pub fn mu_eff(economy: &Economy) -> f64 {
    let mut weighted = 0.0;
    let mut employed = 0u64;
    for f in &economy.firms {
        weighted += f.n_workers as f64 * f.mu;
        employed += f.n_workers;
    }
    if employed == 0 {
        log::warn!(
            "effective margin undefined at t={}: nobody employed; using 0",
            economy.t
        );
        0.0
    } else {
        weighted / employed as f64
    }
}

/// Snapshot of all alive firms.
pub fn cross_section(economy: &Economy) -> FirmCrossSection {
    let price = economy.params.price;
    FirmCrossSection {
        t: economy.t,
        rows: economy
            .firms
            .iter()
            .map(|f| CrossSectionRow {
                id: f.id.0,
                age: economy.t.saturating_sub(f.birth_t),
                mu: f.mu,
                mu_gross_realized: f.mu_gross_realized(price),
                mu_net_realized: f.mu_net_realized(price),
                size: f.n_workers,
                q_produced: f.q_produced,
                q_sold: f.q_sold,
                cash: f.cash,
                debt: f.debt,
                equity: f.equity(),
            })
            .collect(),
    }
}

/// Pairs of (size at the earlier snapshot, log growth) for firms alive with
/// positive size in both snapshots; exits and entrants drop out.
pub fn growth_pairs(earlier: &FirmCrossSection, later: &FirmCrossSection) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut it_later = later.rows.iter().peekable();
    for a in &earlier.rows {
        while let Some(b) = it_later.peek() {
            if b.id < a.id {
                it_later.next();
            } else {
                break;
            }
        }
        if let Some(b) = it_later.peek() {
            if b.id == a.id && a.size > 0 && b.size > 0 {
                out.push((a.size, (b.size as f64 / a.size as f64).ln()));
            }
        }
    }
    out
}

/// Survivor log growth rates between two snapshots of the same run.
pub fn growth_rates(earlier: &FirmCrossSection, later: &FirmCrossSection) -> Vec<f64> {
    growth_pairs(earlier, later).into_iter().map(|(_, g)| g).collect()
}

/// Nearest-rank quantile: the smallest value with at least `q * n` samples at
/// or below it. `q` must lie in (0, 1].
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) || q == 0.0 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile input must not contain NaN"));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

/// Continuous maximum-likelihood tail-index fit on samples at or above
/// `x_min`: `alpha = n / sum(ln(s_i / x_min))`, the CCDF exponent convention.
pub fn fit_powerlaw_ccdf(sizes: &[f64], x_min: f64) -> Result<DistributionFit, StatsError> {
    if !(x_min > 0.0) {
        return Err(StatsError::NonPositiveValue);
    }
    let tail: Vec<f64> = sizes.iter().copied().filter(|&s| s >= x_min).collect();
    let n = tail.len();
    if n < 10 {
        return Err(StatsError::TooFewSamples { needed: 10, got: n });
    }
    let sum_log: f64 = tail.iter().map(|&s| (s / x_min).ln()).sum();
    if sum_log <= 0.0 {
        return Err(StatsError::DegenerateSample(
            "all tail samples sit at the cutoff; the tail index diverges",
        ));
    }
    let nf = n as f64;
    let exponent = nf / sum_log;
    let log_likelihood = nf * exponent.ln() + nf * exponent * x_min.ln()
        - (exponent + 1.0) * tail.iter().map(|s| s.ln()).sum::<f64>();
    Ok(DistributionFit {
        params: FitParams::PowerlawCcdf { exponent, x_min },
        log_likelihood,
        n_samples: n,
    })
}

/// Maximum-likelihood Laplace and Gaussian fits of a growth-rate sample, with
/// the sample excess kurtosis. The tent verdict is a likelihood comparison.
pub fn fit_tent(growth: &[f64]) -> Result<TentFit, StatsError> {
    let n = growth.len();
    if n < 30 {
        return Err(StatsError::TooFewSamples { needed: 30, got: n });
    }
    let nf = n as f64;
    let mut sorted = growth.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("growth rates must not be NaN"));
    let location = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let scale = growth.iter().map(|g| (g - location).abs()).sum::<f64>() / nf;
    let mean = growth.iter().sum::<f64>() / nf;
    let var = growth.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / nf;
    if scale <= 0.0 || var <= 0.0 {
        return Err(StatsError::DegenerateSample("constant growth sample"));
    }
    let ll_laplace = -nf * ((2.0 * scale).ln() + 1.0);
    let ll_gaussian = -0.5 * nf * ((2.0 * std::f64::consts::PI * var).ln() + 1.0);
    let m4 = growth.iter().map(|g| (g - mean).powi(4)).sum::<f64>() / nf;
    Ok(TentFit {
        laplace: DistributionFit {
            params: FitParams::Laplace { location, scale },
            log_likelihood: ll_laplace,
            n_samples: n,
        },
        gaussian: DistributionFit {
            params: FitParams::Gaussian {
                mean,
                std_dev: var.sqrt(),
            },
            log_likelihood: ll_gaussian,
            n_samples: n,
        },
        excess_kurtosis: m4 / (var * var) - 3.0,
        tent_shaped: ll_laplace > ll_gaussian,
    })
}

/// Trailing moving average; the first `window - 1` entries average the
/// available prefix.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, StatsError> {
    if series.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    if window == 0 {
        return Err(StatsError::ZeroWindow);
    }
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= window {
            acc -= series[i - window];
        }
        let len = (i + 1).min(window);
        out.push(acc / len as f64);
    }
    Ok(out)
}

/// One point per alive firm with sales: (net realized margin, size).
pub fn size_margin_scatter(cross: &FirmCrossSection) -> Vec<(f64, u64)> {
    cross
        .rows
        .iter()
        .filter(|r| r.q_sold > 0)
        .filter_map(|r| r.mu_net_realized.map(|m| (m, r.size)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogHistogram {
    /// `counts.len() + 1` bin edges, logarithmically spaced.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Histogram with logarithmically spaced bins covering the data range.
pub fn histogram_log_binned(
    values: &[f64],
    bins_per_decade: usize,
) -> Result<LogHistogram, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    if bins_per_decade == 0 {
        return Err(StatsError::ZeroBins);
    }
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(StatsError::NonPositiveValue);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(LogHistogram {
            edges: vec![lo, hi],
            counts: vec![values.len() as u64],
        });
    }
    let bpd = bins_per_decade as f64;
    let n_bins = (((hi / lo).log10() * bpd).ceil() as usize).max(1);
    let edges = (0..=n_bins)
        .map(|i| lo * 10f64.powf(i as f64 / bpd))
        .collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let idx = (((v / lo).log10() * bpd).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Ok(LogHistogram { edges, counts })
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

/// Pearson correlation; `None` when either side is degenerate.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Economy, SimParams};
    use crate::markets::SimRng;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn synthetic_pareto(alpha: f64, x_min: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                x_min * u.powf(-1.0 / alpha)
            })
            .collect()
    }

    fn synthetic_laplace(location: f64, scale: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() - 0.5;
                let mag = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
                location - scale * u.signum() * mag.ln()
            })
            .collect()
    }

    fn synthetic_gaussian(mean: f64, sd: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..n)
            .map(|_| mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect()
    }

    #[test]
    fn mu_eff_is_the_employment_weighted_margin() {
        let params = SimParams {
            n_workers: 100,
            n_firms_init: 2,
            init_unemployment: 0.0,
            init_debt_max: 0.0,
            ..SimParams::default()
        };
        let mut economy = Economy::new(params).unwrap();
        economy.firms[0].n_workers = 10;
        economy.firms[0].mu = 0.1;
        economy.firms[1].n_workers = 30;
        economy.firms[1].mu = 0.05;
        assert_abs_diff_eq!(mu_eff(&economy), 0.0625, epsilon = 1e-12);

        economy.firms[1].n_workers = 0;
        assert_abs_diff_eq!(mu_eff(&economy), 0.1, epsilon = 1e-12);

        economy.firms[0].mu = 0.07;
        economy.firms[1].mu = 0.07;
        economy.firms[1].n_workers = 55;
        assert_abs_diff_eq!(mu_eff(&economy), 0.07, epsilon = 1e-12);

        economy.firms[0].n_workers = 0;
        economy.firms[1].n_workers = 0;
        assert_eq!(mu_eff(&economy), 0.0);
    }

    fn cross(rows: Vec<(u64, u64)>) -> FirmCrossSection {
        FirmCrossSection {
            t: 0,
            rows: rows
                .into_iter()
                .map(|(id, size)| CrossSectionRow {
                    id,
                    age: 0,
                    mu: 0.05,
                    mu_gross_realized: Some(0.04),
                    mu_net_realized: Some(0.03),
                    size,
                    q_produced: 0,
                    q_sold: 1,
                    cash: 0.0,
                    debt: 0.0,
                    equity: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn growth_rates_match_log_ratios_on_survivors() {
        let a = cross(vec![(1, 20), (2, 20), (3, 10), (4, 0)]);
        let b = cross(vec![(1, 20), (2, 22), (4, 5), (5, 3)]);
        let g = growth_rates(&a, &b);
        // firm 1: flat; firm 2: ln(1.1); firm 3 exited; firm 4 had size 0
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[1], (1.1f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn powerlaw_mle_recovers_a_synthetic_exponent() {
        let sizes = synthetic_pareto(1.5, 1.0, 10_000, 99);
        let fit = fit_powerlaw_ccdf(&sizes, 1.0).unwrap();
        let FitParams::PowerlawCcdf { exponent, .. } = fit.params else {
            panic!("wrong fit kind");
        };
        // standard error is alpha / sqrt(n); 3 SE ~ 0.045
        assert!(
            (exponent - 1.5).abs() < 0.05,
            "estimated exponent {exponent}, expected 1.5"
        );
        assert_eq!(fit.n_samples, 10_000);
    }

    #[test]
    fn powerlaw_mle_is_exact_at_one_efold() {
        // all samples at e * x_min: sum of logs is n, so the index is exactly 1
        let sizes = vec![std::f64::consts::E * 2.0; 50];
        let fit = fit_powerlaw_ccdf(&sizes, 2.0).unwrap();
        let FitParams::PowerlawCcdf { exponent, .. } = fit.params else {
            panic!("wrong fit kind");
        };
        assert_abs_diff_eq!(exponent, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn powerlaw_mle_rejects_degenerate_and_tiny_samples() {
        let sizes = vec![3.0; 100];
        assert_eq!(
            fit_powerlaw_ccdf(&sizes, 3.0).unwrap_err(),
            StatsError::DegenerateSample(
                "all tail samples sit at the cutoff; the tail index diverges"
            )
        );
        let sizes = vec![5.0; 9];
        assert!(matches!(
            fit_powerlaw_ccdf(&sizes, 1.0).unwrap_err(),
            StatsError::TooFewSamples { needed: 10, got: 9 }
        ));
    }

    #[test]
    fn tent_fit_prefers_laplace_on_laplace_data() {
        let sample = synthetic_laplace(0.0, 0.1, 10_000, 7);
        let fit = fit_tent(&sample).unwrap();
        assert!(fit.tent_shaped);
        assert!(
            fit.excess_kurtosis > 2.0 && fit.excess_kurtosis < 4.5,
            "kurtosis {} should be near 3",
            fit.excess_kurtosis
        );
        let FitParams::Laplace { location, scale } = fit.laplace.params else {
            panic!("wrong fit kind");
        };
        assert_abs_diff_eq!(location, 0.0, epsilon = 0.01);
        assert_abs_diff_eq!(scale, 0.1, epsilon = 0.01);
    }

    #[test]
    fn tent_fit_prefers_gaussian_on_gaussian_data() {
        let sample = synthetic_gaussian(0.02, 0.1, 10_000, 8);
        let fit = fit_tent(&sample).unwrap();
        assert!(!fit.tent_shaped);
        assert!(
            fit.excess_kurtosis.abs() < 0.5,
            "kurtosis {} should be near 0",
            fit.excess_kurtosis
        );
    }

    #[test]
    fn tent_fit_classifies_reliably() {
        // a smaller version of the acceptance check: 20 + 20 trials at n = 10^4
        let mut correct = 0;
        for i in 0..20u64 {
            if fit_tent(&synthetic_laplace(0.0, 0.05, 10_000, 100 + i))
                .unwrap()
                .tent_shaped
            {
                correct += 1;
            }
            if !fit_tent(&synthetic_gaussian(0.0, 0.05, 10_000, 200 + i))
                .unwrap()
                .tent_shaped
            {
                correct += 1;
            }
        }
        assert_eq!(correct, 40, "classifier must separate clean synthetic data");
    }

    #[test]
    fn tent_fit_rejects_constant_and_tiny_samples() {
        assert!(matches!(
            fit_tent(&vec![0.5; 100]).unwrap_err(),
            StatsError::DegenerateSample(_)
        ));
        assert!(matches!(
            fit_tent(&vec![0.5; 10]).unwrap_err(),
            StatsError::TooFewSamples { needed: 30, got: 10 }
        ));
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(
            moving_average(&[1.0, 2.0, 3.0], 1).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            moving_average(&[0.0, 0.0, 100.0], 2).unwrap(),
            vec![0.0, 0.0, 50.0]
        );
        assert_eq!(
            moving_average(&[4.0, 4.0, 4.0, 4.0], 3).unwrap(),
            vec![4.0, 4.0, 4.0, 4.0]
        );
        assert_eq!(moving_average(&[], 2).unwrap_err(), StatsError::EmptySeries);
        assert_eq!(
            moving_average(&[1.0], 0).unwrap_err(),
            StatsError::ZeroWindow
        );
    }

    #[test]
    fn scatter_skips_firms_without_sales() {
        let mut c = cross(vec![(1, 10), (2, 20), (3, 30)]);
        c.rows[1].q_sold = 0;
        c.rows[1].mu_net_realized = None;
        let pts = size_margin_scatter(&c);
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], (0.03, 10));
        assert_eq!(pts[1], (0.03, 30));
    }

    #[test]
    fn log_histogram_counts_sum_to_sample_size() {
        let values = synthetic_pareto(1.2, 1.0, 5000, 3);
        let h = histogram_log_binned(&values, 5).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 5000);
        assert_eq!(h.edges.len(), h.counts.len() + 1);

        let h = histogram_log_binned(&[7.5], 5).unwrap();
        assert_eq!(h.counts, vec![1]);

        assert_eq!(
            histogram_log_binned(&[1.0, -2.0], 5).unwrap_err(),
            StatsError::NonPositiveValue
        );
    }

    #[test]
    fn log_histogram_of_pareto_data_is_straight_in_log_log() {
        // density ~ s^-(alpha+1): with log-spaced bins, log10(count/width) is
        // linear in log10(midpoint) with slope -(alpha + 1)
        let alpha = 1.5;
        let values = synthetic_pareto(alpha, 1.0, 200_000, 11);
        let h = histogram_log_binned(&values, 4).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &c) in h.counts.iter().enumerate() {
            // only well-populated bins carry signal
            if c >= 200 {
                let width = h.edges[i + 1] - h.edges[i];
                let mid = (h.edges[i] * h.edges[i + 1]).sqrt();
                xs.push(mid.log10());
                ys.push((c as f64 / width).log10());
            }
        }
        assert!(xs.len() >= 4, "need several populated bins");
        // least squares slope
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            (slope + (alpha + 1.0)).abs() < 0.2,
            "slope {slope}, expected {}",
            -(alpha + 1.0)
        );
    }

    #[test]
    fn quantile_uses_nearest_rank() {
        let values: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        assert_eq!(quantile(&values, 0.9).unwrap(), 9.0);
        assert_eq!(quantile(&values, 1.0).unwrap(), 10.0);
        assert_eq!(quantile(&values, 0.05).unwrap(), 1.0);
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn correlation_detects_sign() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 5.0).collect();
        assert_abs_diff_eq!(correlation(&xs, &ys).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(correlation(&xs, &vec![1.0; 100]), None);
    }
}
