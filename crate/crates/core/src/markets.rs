//! Stochastic allocation primitives shared by the job and goods markets.
//!
//! Both markets ration a limited total over weighted bins (job openings per
//! firm, unit goods per firm, unit demands per agent) such that every unit
//! slot has the same chance of being chosen. That is multivariate
//! hypergeometric sampling; [`allocate_without_replacement`] implements it
//! exactly with sequential conditional draws, one per bin, so it stays linear
//! in the number of bins rather than in the number of slots.

use rand::Rng;
use thiserror::Error;

/// The deterministic random stream used throughout a simulation run.
///
/// ChaCha8 gives a platform-independent, seedable stream; every draw in a run
/// comes from a single instance of this generator in a fixed order.
pub type SimRng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocationError {
    #[error("cannot allocate {total} units over bins with total capacity {capacity}")]
    TotalExceedsCapacity { total: u64, capacity: u64 },
}

/// A validated request to allocate `total` indivisible units over weighted bins.
#[derive(Debug, Clone)]
pub struct AllocationRequest<'a> {
    weights: &'a [u64],
    total: u64,
    capacity: u64,
}

impl<'a> AllocationRequest<'a> {
    pub fn new(weights: &'a [u64], total: u64) -> Result<Self, AllocationError> {
        let capacity: u64 = weights.iter().sum();
        if total > capacity {
            return Err(AllocationError::TotalExceedsCapacity { total, capacity });
        }
        Ok(Self {
            weights,
            total,
            capacity,
        })
    }

    /// Draws per-bin counts `k_i` with `sum(k_i) == total` exactly and
    /// `k_i <= weight_i`, distributed as multivariate hypergeometric.
    ///
    /// Bin `i` receives a conditional `Hypergeometric(remaining_capacity,
    /// weight_i, remaining_total)` draw; the chain rule makes the joint
    /// distribution identical to choosing `total` of the `capacity` unit
    /// slots uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.weights.len());
        let mut remaining_total = self.total;
        let mut remaining_capacity = self.capacity;
        for &w in self.weights {
            let k = if remaining_total == 0 || w == 0 {
                0
            } else if remaining_total == remaining_capacity {
                // every remaining slot must be taken
                w
            } else if w == remaining_capacity {
                // this bin holds all remaining slots
                remaining_total
            } else {
                sample_hypergeometric(remaining_capacity, w, remaining_total, rng)
            };
            debug_assert!(k <= w);
            out.push(k);
            remaining_total -= k;
            remaining_capacity -= w;
        }
        debug_assert_eq!(remaining_total, 0);
        out
    }
}

/// Allocates `total` units over `weights` without replacement; see
/// [`AllocationRequest::sample`].
pub fn allocate_without_replacement<R: Rng + ?Sized>(
    weights: &[u64],
    total: u64,
    rng: &mut R,
) -> Result<Vec<u64>, AllocationError> {
    Ok(AllocationRequest::new(weights, total)?.sample(rng))
}

fn ln_factorial(k: u64) -> f64 {
    libm::lgamma((k + 1) as f64)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Draws from `Hypergeometric(total, successes, draws)`: the number of
/// successes in `draws` samples taken without replacement from a population
/// of `total` containing `successes` marked items.
///
/// Inverse-CDF enumeration starting at the mode, where the probability mass
/// is exactly representable, walking outward with the two-term recurrence.
/// Stable for any parameters (log-gamma never over- or underflows here) and
/// fast, since the walk length is of the order of one standard deviation.
pub fn sample_hypergeometric<R: Rng + ?Sized>(
    total: u64,
    successes: u64,
    draws: u64,
    rng: &mut R,
) -> u64 {
    assert!(successes <= total && draws <= total, "invalid hypergeometric parameters");
    let lo = draws.saturating_sub(total - successes);
    let hi = successes.min(draws);
    if lo == hi {
        return lo;
    }
    let mode = ((((draws + 1) as f64) * ((successes + 1) as f64) / ((total + 2) as f64)).floor()
        as u64)
        .clamp(lo, hi);
    let ln_p_mode = ln_choose(successes, mode) + ln_choose(total - successes, draws - mode)
        - ln_choose(total, draws);
    let p_mode = ln_p_mode.exp();

    let n = total as f64;
    let k = successes as f64;
    let d = draws as f64;
    // P(x+1)/P(x) and P(x-1)/P(x) for the walk
    let ratio_up = |x: f64| ((k - x) * (d - x)) / ((x + 1.0) * (n - k - d + x + 1.0));
    let ratio_down = |x: f64| (x * (n - k - d + x)) / ((k - x + 1.0) * (d - x + 1.0));

    let mut remaining = rng.random::<f64>() - p_mode;
    if remaining < 0.0 {
        return mode;
    }
    let mut down = mode;
    let mut p_down = p_mode;
    let mut up = mode;
    let mut p_up = p_mode;
    loop {
        let mut exhausted = true;
        if down > lo {
            p_down *= ratio_down(down as f64);
            down -= 1;
            remaining -= p_down;
            if remaining < 0.0 {
                return down;
            }
            exhausted = false;
        }
        if up < hi {
            p_up *= ratio_up(up as f64);
            up += 1;
            remaining -= p_up;
            if remaining < 0.0 {
                return up;
            }
            exhausted = false;
        }
        if exhausted {
            // the whole support is enumerated; only floating-point rounding
            // can leave a sliver of unassigned mass
            return hi;
        }
    }
}

/// Unbiased quantization: returns `floor(x)` plus a Bernoulli draw on the
/// fractional part, so `E[result] = x`. Integer inputs consume no randomness.
///
/// Panics on negative or non-finite input.
pub fn stochastic_round<R: Rng + ?Sized>(x: f64, rng: &mut R) -> u64 {
    assert!(
        x >= 0.0 && x.is_finite(),
        "stochastic_round requires a finite non-negative input, got {x}"
    );
    let floor = x.floor();
    let frac = x - floor;
    let mut k = floor as u64;
    if frac > 0.0 && rng.random::<f64>() < frac {
        k += 1;
    }
    k
}

/// Uniform draw on the closed interval `[lo, hi]`. Panics if `lo > hi`.
pub fn draw_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    assert!(lo <= hi, "draw_uniform requires lo <= hi, got [{lo}, {hi}]");
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Uniform draw on the closed integer range `[lo, hi]`. Panics if `lo > hi`.
pub fn draw_uniform_int<R: Rng + ?Sized>(lo: u64, hi: u64, rng: &mut R) -> u64 {
    assert!(
        lo <= hi,
        "draw_uniform_int requires lo <= hi, got [{lo}, {hi}]"
    );
    rng.random_range(lo..=hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    #[test]
    fn stochastic_round_integer_input_is_exact() {
        let mut r = rng(1);
        for _ in 0..1000 {
            assert_eq!(stochastic_round(3.0, &mut r), 3);
            assert_eq!(stochastic_round(0.0, &mut r), 0);
        }
    }

    #[test]
    fn stochastic_round_matches_bernoulli_frequencies() {
        // 3.3 -> 3 w.p. 0.7, 4 w.p. 0.3; check against a 3-sigma binomial bound.
        let mut r = rng(2);
        let n = 200_000u64;
        let mut fours = 0u64;
        for _ in 0..n {
            match stochastic_round(3.3, &mut r) {
                3 => {}
                4 => fours += 1,
                k => panic!("unexpected rounding result {k}"),
            }
        }
        let p_hat = fours as f64 / n as f64;
        let sigma = (0.3 * 0.7 / n as f64).sqrt();
        assert!(
            (p_hat - 0.3).abs() < 3.0 * sigma,
            "p_hat = {p_hat}, expected 0.3 within {}",
            3.0 * sigma
        );
    }

    #[test]
    fn stochastic_round_preserves_expectation() {
        let mut r = rng(3);
        let n = 200_000u64;
        let sum: u64 = (0..n).map(|_| stochastic_round(7.25, &mut r)).sum();
        let mean = sum as f64 / n as f64;
        // sd of one draw is sqrt(0.25 * 0.75)
        let sigma = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((mean - 7.25).abs() < 3.0 * sigma, "mean = {mean}");
    }

    #[test]
    #[should_panic(expected = "non-negative")]
    fn stochastic_round_rejects_negative() {
        let mut r = rng(4);
        stochastic_round(-0.5, &mut r);
    }

    #[test]
    fn allocate_exhaustive_when_total_equals_capacity() {
        let mut r = rng(5);
        for _ in 0..100 {
            let k = allocate_without_replacement(&[2, 3], 5, &mut r).unwrap();
            assert_eq!(k, vec![2, 3]);
        }
    }

    #[test]
    fn allocate_zero_total_gives_zeros() {
        let mut r = rng(6);
        let k = allocate_without_replacement(&[4, 0, 9], 0, &mut r).unwrap();
        assert_eq!(k, vec![0, 0, 0]);
    }

    #[test]
    fn allocate_rejects_total_above_capacity() {
        let mut r = rng(7);
        let err = allocate_without_replacement(&[2, 3], 6, &mut r).unwrap_err();
        assert_eq!(
            err,
            AllocationError::TotalExceedsCapacity {
                total: 6,
                capacity: 5
            }
        );
    }

    #[test]
    fn allocate_matches_hypergeometric_moments() {
        // weights (100, 100), total 100: k_1 ~ Hypergeometric(200, 100, 100)
        // with mean 50 and variance 100 * 0.5 * 0.5 * (100/199).
        let mut r = rng(8);
        let trials = 100_000usize;
        let expected_mean = 50.0;
        let expected_var: f64 = 100.0 * 0.5 * 0.5 * (100.0 / 199.0);
        let mut sum = 0u64;
        let mut sum_sq = 0u64;
        for _ in 0..trials {
            let k = allocate_without_replacement(&[100, 100], 100, &mut r).unwrap();
            assert_eq!(k[0] + k[1], 100, "sums must be exact in every trial");
            assert!(k[0] <= 100 && k[1] <= 100);
            sum += k[0];
            sum_sq += k[0] * k[0];
        }
        let mean = sum as f64 / trials as f64;
        let var = sum_sq as f64 / trials as f64 - mean * mean;
        let sigma_mean = expected_var.sqrt() / (trials as f64).sqrt();
        assert!(
            (mean - expected_mean).abs() < 3.0 * sigma_mean,
            "mean = {mean}, expected {expected_mean} within {}",
            3.0 * sigma_mean
        );
        assert!(
            (var - expected_var).abs() < 0.1 * expected_var,
            "var = {var}, expected {expected_var} within 10%"
        );
    }

    #[test]
    fn allocate_mean_is_proportional_to_weight() {
        // E[k_i] = w_i * total / capacity: weights (10, 90), total 50 -> (5, 45).
        let mut r = rng(9);
        let trials = 50_000usize;
        let mut sum0 = 0u64;
        for _ in 0..trials {
            let k = allocate_without_replacement(&[10, 90], 50, &mut r).unwrap();
            assert_eq!(k[0] + k[1], 50);
            sum0 += k[0];
        }
        let mean0 = sum0 as f64 / trials as f64;
        // Var(k_0) = n K/N (1-K/N) (N-n)/(N-1) = 50*0.1*0.9*(50/99)
        let var0: f64 = 50.0 * 0.1 * 0.9 * (50.0 / 99.0);
        let sigma_mean = var0.sqrt() / (trials as f64).sqrt();
        assert!(
            (mean0 - 5.0).abs() < 3.0 * sigma_mean,
            "mean = {mean0}, expected 5.0 within {}",
            3.0 * sigma_mean
        );
    }

    #[test]
    fn hypergeometric_matches_exact_pmf_on_a_small_case() {
        // Hypergeometric(6, 3, 4): P(1,2,3) = (3*1, 3*3, 1*3)/C(6,4) -> (0.2, 0.6, 0.2)
        let mut r = rng(40);
        let trials = 60_000usize;
        let mut counts = [0u64; 4];
        for _ in 0..trials {
            let x = sample_hypergeometric(6, 3, 4, &mut r);
            assert!((1..=3).contains(&x), "support violation: {x}");
            counts[x as usize] += 1;
        }
        for (x, p) in [(1usize, 0.2), (2, 0.6), (3, 0.2)] {
            let p_hat = counts[x] as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (p_hat - p).abs() < 3.0 * sigma,
                "P(X = {x}) = {p_hat}, expected {p}"
            );
        }
    }

    #[test]
    fn hypergeometric_moments_hold_for_large_populations() {
        // a parameter class with a huge population and a sample close to it
        let (total, successes, draws) = (150_000u64, 30u64, 140_000u64);
        let mean_expected = draws as f64 * successes as f64 / total as f64;
        let var_expected = mean_expected
            * (1.0 - successes as f64 / total as f64)
            * ((total - draws) as f64 / (total - 1) as f64);
        let mut r = rng(41);
        let trials = 40_000usize;
        let mut sum = 0u64;
        let mut sum_sq = 0u64;
        for _ in 0..trials {
            let x = sample_hypergeometric(total, successes, draws, &mut r);
            assert!(x <= successes);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum as f64 / trials as f64;
        let var = sum_sq as f64 / trials as f64 - mean * mean;
        let sigma_mean = var_expected.sqrt() / (trials as f64).sqrt();
        assert!(
            (mean - mean_expected).abs() < 3.0 * sigma_mean,
            "mean {mean}, expected {mean_expected}"
        );
        assert!(
            (var - var_expected).abs() < 0.1 * var_expected,
            "var {var}, expected {var_expected}"
        );
    }

    #[test]
    fn hypergeometric_degenerate_support_is_deterministic() {
        let mut r = rng(42);
        // draws == total: everything is taken
        assert_eq!(sample_hypergeometric(10, 4, 10, &mut r), 4);
        // no successes in the population
        assert_eq!(sample_hypergeometric(10, 0, 5, &mut r), 0);
        // sample must contain all successes
        assert_eq!(sample_hypergeometric(10, 10, 7, &mut r), 7);
    }

    #[test]
    fn allocate_matches_exact_distribution_on_small_case() {
        // weights (2, 2), total 2: P(k_0 = 0, 1, 2) = (1/6, 4/6, 1/6).
        let mut r = rng(10);
        let trials = 60_000usize;
        let mut counts = [0u64; 3];
        for _ in 0..trials {
            let k = allocate_without_replacement(&[2, 2], 2, &mut r).unwrap();
            counts[k[0] as usize] += 1;
        }
        for (i, p) in [(0usize, 1.0 / 6.0), (1, 4.0 / 6.0), (2, 1.0 / 6.0)] {
            let p_hat = counts[i] as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (p_hat - p).abs() < 3.0 * sigma,
                "P(k0 = {i}) = {p_hat}, expected {p} within {}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn allocate_is_permutation_equivariant_in_the_mean() {
        // Permuting bins and un-permuting the result must leave per-bin means
        // unchanged; compare empirical means on a weight vector and its reverse.
        let weights = [5u64, 20, 75];
        let reversed = [75u64, 20, 5];
        let total = 40;
        let trials = 40_000usize;
        let mut r1 = rng(11);
        let mut r2 = rng(12);
        let mut sums = [0u64; 3];
        let mut sums_rev = [0u64; 3];
        for _ in 0..trials {
            let k = allocate_without_replacement(&weights, total, &mut r1).unwrap();
            let k_rev = allocate_without_replacement(&reversed, total, &mut r2).unwrap();
            for i in 0..3 {
                sums[i] += k[i];
                sums_rev[i] += k_rev[2 - i];
            }
        }
        for i in 0..3 {
            let m = sums[i] as f64 / trials as f64;
            let m_rev = sums_rev[i] as f64 / trials as f64;
            let expected = weights[i] as f64 * total as f64 / 100.0;
            // generous bound: both estimators have sd well under 0.05 here
            assert!((m - expected).abs() < 0.2, "bin {i}: mean {m} vs {expected}");
            assert!((m_rev - expected).abs() < 0.2);
        }
    }

    #[test]
    fn draw_uniform_respects_bounds() {
        let mut r = rng(13);
        for _ in 0..10_000 {
            let x = draw_uniform(0.0, 0.1, &mut r);
            assert!((0.0..=0.1).contains(&x));
        }
        assert_eq!(draw_uniform(2.5, 2.5, &mut r), 2.5);
    }

    #[test]
    fn draw_uniform_int_is_uniform_on_closed_range() {
        let mut r = rng(14);
        let trials = 90_000usize;
        let mut counts = [0u64; 3];
        for _ in 0..trials {
            let k = draw_uniform_int(1, 3, &mut r);
            assert!((1..=3).contains(&k));
            counts[(k - 1) as usize] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let p_hat = c as f64 / trials as f64;
            assert!(
                (p_hat - p).abs() < 3.0 * sigma,
                "value {}: p_hat = {p_hat}",
                i + 1
            );
        }
        assert_eq!(draw_uniform_int(4, 4, &mut r), 4);
    }

    #[test]
    #[should_panic(expected = "lo <= hi")]
    fn draw_uniform_rejects_inverted_range() {
        let mut r = rng(15);
        draw_uniform(1.0, 0.0, &mut r);
    }

    #[test]
    #[should_panic(expected = "lo <= hi")]
    fn draw_uniform_int_rejects_inverted_range() {
        let mut r = rng(16);
        draw_uniform_int(3, 1, &mut r);
    }
}
