//! Monte-Carlo estimators that check empirical frequencies and moments
//! against analytic bounds.
//!
//! Trial `i` always draws from `RngStream::new(master_seed, i)` and results are
//! reduced in trial order, so a report is identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QjlError, Result};
use crate::sampling::RngStream;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

pub const MIN_TAIL_TRIALS: u64 = 100;
pub const MIN_MOMENT_TRIALS: u64 = 1000;
pub const MAX_EMPIRICAL_M: u32 = 16;

/// Wilson score interval for `failures / trials` at normal quantile `z`.
pub fn wilson_interval(failures: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Binomial standard error `√(p(1−p)/n)`.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub trials: u64,
    pub failures: u64,
    pub empirical_rate: f64,
    pub wilson_ci_lower: f64,
    pub wilson_ci_upper: f64,
    pub analytic_bound: f64,
    /// The bound is at least 1 and says nothing.
    pub vacuous: bool,
    /// The bound is vacuous or the Wilson lower limit does not exceed it.
    pub passed: bool,
}

impl TailReport {
    pub fn from_counts(failures: u64, trials: u64, analytic_bound: f64) -> Self {
        let (lo, hi) = wilson_interval(failures, trials, Z_99);
        let vacuous = analytic_bound >= 1.0;
        Self {
            trials,
            failures,
            empirical_rate: failures as f64 / trials as f64,
            wilson_ci_lower: lo,
            wilson_ci_upper: hi,
            analytic_bound,
            vacuous,
            passed: vacuous || lo <= analytic_bound,
        }
    }

    /// Standard error of the empirical rate.
    pub fn standard_error(&self) -> f64 {
        binomial_se(self.empirical_rate, self.trials)
    }
}

/// Runs `trials` independent draws and counts values outside `[lo, hi]`.
pub fn empirical_tail<F>(
    sampler: F,
    band: (f64, f64),
    trials: u64,
    master_seed: u64,
    analytic_bound: f64,
) -> Result<TailReport>
where
    F: Fn(&mut RngStream) -> Result<f64> + Sync,
{
    if trials < MIN_TAIL_TRIALS {
        return Err(QjlError::InvalidParameter(format!(
            "tail estimates need at least {MIN_TAIL_TRIALS} trials, got {trials}"
        )));
    }
    let (lo, hi) = band;
    let values = run_trials(&sampler, trials, master_seed)?;
    let failures = values.iter().filter(|x| !(lo <= **x && **x <= hi)).count() as u64;
    Ok(TailReport::from_counts(failures, trials, analytic_bound))
}

/// Sample values of `sampler` for trials `0..trials`, in trial order.
pub fn run_trials<F, T>(sampler: &F, trials: u64, master_seed: u64) -> Result<Vec<T>>
where
    F: Fn(&mut RngStream) -> Result<T> + Sync,
    T: Send,
{
    (0..trials)
        .into_par_iter()
        .map(|i| sampler(&mut RngStream::new(master_seed, i)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub power: u32,
    pub trials: u64,
    pub mean: f64,
    /// Jackknife standard error of the mean.
    pub std_error: f64,
}

/// Sample mean of `x^power` with jackknife standard error.
pub fn empirical_moment<F>(sampler: F, power: u32, trials: u64, master_seed: u64) -> Result<MomentEstimate>
where
    F: Fn(&mut RngStream) -> Result<f64> + Sync,
{
    if trials < MIN_MOMENT_TRIALS {
        return Err(QjlError::InvalidParameter(format!(
            "moment estimates need at least {MIN_MOMENT_TRIALS} trials, got {trials}"
        )));
    }
    if power == 0 || !power.is_multiple_of(2) || power / 2 > MAX_EMPIRICAL_M {
        return Err(QjlError::InvalidParameter(format!(
            "power must be 2m with 1 <= m <= {MAX_EMPIRICAL_M}, got {power}"
        )));
    }
    let xs: Vec<f64> = run_trials(&sampler, trials, master_seed)?
        .into_iter()
        .map(|x: f64| x.powi(power as i32))
        .collect();
    let (mean, std_error) = jackknife_mean(&xs);
    Ok(MomentEstimate { power, trials, mean, std_error })
}

/// Mean and jackknife standard error from the leave-one-out means.
pub fn jackknife_mean(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let total: f64 = xs.iter().sum();
    let mean = total / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let loo_mean_sq_dev: f64 = xs
        .iter()
        .map(|x| {
            let loo = (total - x) / (n - 1.0);
            (loo - mean).powi(2)
        })
        .sum();
    (mean, ((n - 1.0) / n * loo_mean_sq_dev).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov statistic with its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(QjlError::InvalidParameter("KS test needs two nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(lambda) })
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::chi_square_tail_bound;
    use crate::sampling::sample_chi_square_sum;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 1000, Z_99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(500, 1000, Z_99);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn in_band_sampler_has_no_failures() {
        let r = empirical_tail(|_| Ok(0.5), (0.0, 1.0), 1000, 1, 0.01).unwrap();
        assert_eq!(r.failures, 0);
        assert_eq!(r.empirical_rate, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn fair_coin_rate() {
        let r = empirical_tail(|rng| Ok(if rng.bernoulli(0.5) { 2.0 } else { 0.5 }), (0.0, 1.0), 10_000, 2, 0.4)
            .unwrap();
        assert!((r.empirical_rate - 0.5).abs() < 0.02, "{}", r.empirical_rate);
        // a 0.4 bound is statistically violated by a 0.5 rate
        assert!(!r.passed);
    }

    #[test]
    fn vacuous_bounds_pass() {
        let r = empirical_tail(|_| Ok(5.0), (0.0, 1.0), 100, 3, 49.8).unwrap();
        assert_eq!(r.failures, 100);
        assert!(r.vacuous && r.passed);
    }

    #[test]
    fn too_few_trials() {
        assert!(empirical_tail(|_| Ok(0.0), (0.0, 1.0), 99, 1, 0.1).is_err());
        assert!(empirical_moment(|_| Ok(0.0), 2, 999, 1).is_err());
        assert!(empirical_moment(|_| Ok(0.0), 3, 1000, 1).is_err());
        assert!(empirical_moment(|_| Ok(0.0), 34, 1000, 1).is_err());
    }

    #[test]
    fn chi_square_tail_respects_sharp_bound() {
        let bound = chi_square_tail_bound(16, 1.0).unwrap().sharp;
        let r = empirical_tail(|rng| sample_chi_square_sum(16, rng), (0.0, 32.0), 100_000, 4, bound).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.empirical_rate <= bound);
    }

    #[test]
    fn constant_moment_is_exact() {
        let e = empirical_moment(|_| Ok(1.5), 4, 1000, 5).unwrap();
        assert_eq!(e.mean, 1.5f64.powi(4));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn jackknife_matches_classical_se_and_shrinks() {
        let xs: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64).collect();
        let (mean, se) = jackknife_mean(&xs);
        let n = xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((se - (var / n).sqrt()).abs() < 1e-9);

        let small = empirical_moment(|rng| Ok(rng.gaussian()), 2, 1000, 6).unwrap();
        let large = empirical_moment(|rng| Ok(rng.gaussian()), 2, 4000, 6).unwrap();
        let ratio = small.std_error / large.std_error;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert!(same.p_value > 0.99);
        let b: Vec<f64> = a.iter().map(|x| x + 500.0).collect();
        let shifted = ks_two_sample(&a, &b).unwrap();
        assert!((shifted.statistic - 0.5).abs() < 1e-12);
        assert!(shifted.p_value < 1e-10);
    }

    #[test]
    fn results_independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                empirical_tail(|rng| sample_chi_square_sum(4, rng), (0.0, 6.0), 5000, 7, 0.5).unwrap()
            })
        };
        assert_eq!(run(1), run(3));
    }
}
