//! The Yule-Simon distribution and the Yule-Simon counting process on `[0, 1]`.
//!
//! A Yule-Simon process `Y` with parameter `rho` is built from a uniform
//! variable `U` and a standard Yule process `Z` started at 1:
//! `Y(t) = 0` for `t < U` and `Y(t) = Z((ln t - ln U) / rho)` otherwise.
//! Paths are stored by their jump times, so every marginal is exact.

use crate::error::domain;
use crate::math::{ln_beta, ln_gamma};
use crate::rng;
use crate::{Error, Result};
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Per-path jump budget of [`ys_process_sample`].
pub const JUMP_CAP: usize = 10_000_000;

/// The reinforcement probability `p` in `(0, 1)`; `rho = 1 / p` is always
/// derived from it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MemoryParameter {
    p: f64,
}

impl MemoryParameter {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Self { p })
        } else {
            Err(domain!("memory parameter must lie in (0, 1), got {p}"))
        }
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Yule-Simon parameter `1 / p`.
    #[inline]
    pub fn rho(&self) -> f64 {
        1.0 / self.p
    }
}

/// A nondecreasing, right-continuous, integer-valued path on `[0, 1]` with
/// unit jumps, started from 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountingPath {
    jump_times: Vec<f64>,
}

impl CountingPath {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Validates that the times are strictly increasing and lie in `(0, 1]`.
    pub fn from_jump_times(jump_times: Vec<f64>) -> Result<Self> {
        let mut prev = 0.0;
        for &t in &jump_times {
            if !(t > prev && t <= 1.0) {
                return Err(domain!(
                    "jump times must be strictly increasing in (0, 1], found {t} after {prev}"
                ));
            }
            prev = t;
        }
        Ok(Self { jump_times })
    }

    /// Counter path whose `i`-th jump happens at step `events[i]` of an
    /// `n`-step sequence, rescaled so that step `k` sits at time `k / n`.
    pub fn from_steps(events: &[usize], n: usize) -> Result<Self> {
        let times = events.iter().map(|&k| k as f64 / n as f64).collect();
        Self::from_jump_times(times)
    }

    #[inline]
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Number of jumps in `[0, t]`.
    #[inline]
    pub fn value(&self, t: f64) -> u64 {
        self.jump_times.partition_point(|&s| s <= t) as u64
    }

    /// `value(1)`.
    #[inline]
    pub fn terminal(&self) -> u64 {
        self.jump_times.len() as u64
    }

    pub fn is_zero(&self) -> bool {
        self.jump_times.is_empty()
    }

    /// The path `s -> value(s * t)` on `[0, 1]`, for `t` in `(0, 1]`.
    pub fn time_scaled(&self, t: f64) -> CountingPath {
        let jump_times = self
            .jump_times
            .iter()
            .take_while(|&&s| s <= t)
            .map(|&s| (s / t).min(1.0))
            .collect();
        CountingPath { jump_times }
    }
}

fn check_rho(rho: f64, lower: f64) -> Result<()> {
    if rho > lower && rho.is_finite() {
        Ok(())
    } else {
        Err(domain!("Yule-Simon parameter must be finite and > {lower}, got {rho}"))
    }
}

/// Yule-Simon probability mass `rho * B(k, rho + 1)`, `k >= 1`.
pub fn ys_pmf(k: u64, rho: f64) -> Result<f64> {
    if k < 1 {
        return Err(domain!("Yule-Simon support starts at 1, got k = {k}"));
    }
    check_rho(rho, 0.0)?;
    Ok(rho * libm::exp(ln_beta(k as f64, rho + 1.0)))
}

/// Upper tail `P(Y >= k) = rho * B(k, rho)`.
pub fn ys_tail(k: u64, rho: f64) -> Result<f64> {
    check_rho(rho, 0.0)?;
    if k <= 1 {
        return Ok(1.0);
    }
    Ok(rho * libm::exp(ln_beta(k as f64, rho)))
}

/// Draw from the Yule-Simon law through its geometric-mixture representation:
/// `E ~ Exp(rho)`, then a geometric variable with success probability `e^{-E}`.
pub fn ys_sample<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> Result<u64> {
    check_rho(rho, 1.0)?;
    Ok(mixture_sample(rho, rng))
}

/// The mixture sampler for any `rho > 0`.
#[inline]
pub(crate) fn mixture_sample<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> u64 {
    let e = rng::exp1(rng) / rho;
    rng::geometric1(libm::exp(-e), rng)
}

/// One exact Yule-Simon path, stored by its jump times.
///
/// The `m`-th jump sits at `U * exp(rho * tau_{m-1})` where
/// `tau_m = sum_{i <= m} E_i / i` are the birth times of a standard Yule
/// process. Jumps at time exactly 1 are kept.
pub fn ys_process_sample<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> Result<CountingPath> {
    check_rho(rho, 1.0)?;
    let u = rng::open01(rng);
    let horizon = -libm::log(u);
    let mut jump_times = alloc::vec![u];
    let mut tau = 0.0;
    let mut m = 1usize;
    loop {
        tau += rng::exp1(rng) / m as f64;
        let log_gap = rho * tau;
        if log_gap > horizon {
            break;
        }
        let t = libm::exp(libm::log(u) + log_gap);
        // rounding can push the last admissible time a hair above 1
        jump_times.push(t.min(1.0));
        m += 1;
        if m > JUMP_CAP {
            return Err(Error::JumpCapExceeded { cap: JUMP_CAP });
        }
    }
    Ok(CountingPath { jump_times })
}

/// `E[Y(t)] = rho t / (rho - 1)`.
pub fn ys_mean(t: f64, rho: f64) -> Result<f64> {
    check_rho(rho, 1.0)?;
    check_time(t)?;
    Ok(rho * t / (rho - 1.0))
}

/// `E[Y(s) Y(t)] = rho^2 / ((rho - 1)(rho - 2)) * s * (t / s)^{1 / rho}`
/// for `s <= t`; the arguments are swapped when `s > t`.
pub fn ys_cross_moment(s: f64, t: f64, rho: f64) -> Result<f64> {
    check_rho(rho, 2.0)?;
    check_time(s)?;
    check_time(t)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s == 0.0 {
        return Ok(0.0);
    }
    let c = rho * rho / ((rho - 1.0) * (rho - 2.0));
    Ok(c * s * libm::pow(t / s, 1.0 / rho))
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(domain!("time must lie in [0, 1], got {t}"))
    }
}

/// Moment `E[Y^q]` of the Yule-Simon law, finite for `0 <= q < rho`.
///
/// Exact sum up to `k = 200_000`, then the two-term asymptotic expansion of
/// the mass function integrated with the midpoint rule.
pub fn ys_moment(q: f64, rho: f64) -> Result<f64> {
    check_rho(rho, 0.0)?;
    if !(q >= 0.0) {
        return Err(domain!("moment order must be >= 0, got {q}"));
    }
    if q >= rho {
        return Ok(f64::INFINITY);
    }
    const K: u64 = 200_000;
    let mut pmf = rho / (rho + 1.0);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 1..=K {
        // Kahan summation: the terms span many orders of magnitude
        let term = pmf * libm::pow(k as f64, q) - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
        pmf *= k as f64 / (k as f64 + rho + 1.0);
    }
    let c = rho * libm::exp(ln_gamma(rho + 1.0));
    let a = rho * (rho + 1.0) / 2.0;
    let s = rho + 1.0 - q;
    let x0 = K as f64 + 0.5;
    let tail = c * (libm::pow(x0, 1.0 - s) / (s - 1.0) - a * libm::pow(x0, -s) / s);
    Ok(sum + tail)
}

/// Exact joint draw of `(Y(t_1), ..., Y(t_k))` for sorted times in `[0, 1]`.
pub fn sample_on_grid<R: Rng + ?Sized>(rho: f64, times: &[f64], rng: &mut R, out: &mut [u64]) {
    let u = rng::open01(rng);
    sample_on_grid_from(rho, u, times, rng, out);
}

/// Grid draw of the path whose first jump happens at `u`.
///
/// Between grid times the Yule process evolves by independent geometric
/// families: `Z(r + d)` given `Z(r) = z` is `z` plus a negative binomial
/// number of births.
pub fn sample_on_grid_from<R: Rng + ?Sized>(
    rho: f64,
    u: f64,
    times: &[f64],
    rng: &mut R,
    out: &mut [u64],
) {
    let ln_u = libm::log(u);
    let mut z = 0u64;
    let mut last_r = 0.0;
    for (t, o) in times.iter().zip(out.iter_mut()) {
        if *t < u {
            *o = 0;
            continue;
        }
        let r = (libm::log(*t) - ln_u) / rho;
        if z == 0 {
            z = rng::geometric1(libm::exp(-r), rng);
        } else if r > last_r {
            z += rng::negative_binomial(z, libm::exp(-(r - last_r)), rng);
        }
        last_r = r;
        *o = z;
    }
}

/// Grid draw of a Yule-Simon path conditioned on `Y(1) = terminal`.
///
/// One-shot form of [`YuleBridge::sample`].
pub fn bridge_on_grid<R: Rng + ?Sized>(
    rho: f64,
    terminal: u64,
    times: &[f64],
    rng: &mut R,
    out: &mut [u64],
) {
    YuleBridge::new(rho).sample(terminal, times, rng, out);
}

/// Grid sampler for Yule-Simon paths conditioned on their value at `t = 1`.
///
/// Given `Y(1) = m`, `e^{-(ln 1 - ln U)/rho}` is `Beta(rho + 1, m)`, and
/// backwards in time `Z(r) - 1` given `Z(r') = m'` is binomial with `m' - 1`
/// trials.
#[derive(Debug, Clone)]
pub struct YuleBridge {
    rho: f64,
    gamma: Gamma<f64>,
}

impl YuleBridge {
    pub fn new(rho: f64) -> Self {
        let gamma = Gamma::new(rho + 1.0, 1.0).expect("positive shape");
        Self { rho, gamma }
    }

    fn horizon_weight<R: Rng + ?Sized>(&self, terminal: u64, rng: &mut R) -> f64 {
        if terminal == 1 {
            return libm::exp(libm::log(rng::open01(rng)) / (self.rho + 1.0));
        }
        let a = self.gamma.sample(rng);
        let b = if terminal <= 16 {
            (0..terminal).map(|_| rng::exp1(rng)).sum()
        } else {
            Gamma::new(terminal as f64, 1.0).expect("positive shape").sample(rng)
        };
        a / (a + b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, terminal: u64, times: &[f64], rng: &mut R, out: &mut [u64]) {
        debug_assert!(terminal >= 1);
        let rho = self.rho;
        let w = self.horizon_weight(terminal, rng);
        let horizon = -libm::log(w); // log-time of Z at t = 1
        let ln_u = -rho * horizon;
        let mut current = terminal;
        let mut r_next = horizon;
        for (t, o) in times.iter().zip(out.iter_mut()).rev() {
            if current == 0 || *t <= 0.0 || libm::log(*t) < ln_u {
                current = 0;
                *o = 0;
                continue;
            }
            let r = horizon + libm::log(*t) / rho;
            let gap = r_next - r;
            if gap > 0.0 && current > 1 {
                let one_minus_q1 = -libm::expm1(-r);
                let q2 = libm::exp(-gap);
                let one_minus_q2 = -libm::expm1(-gap);
                let odds = one_minus_q1 * q2;
                let prob = odds / (odds + one_minus_q2);
                current = 1 + rng::binomial(current - 1, prob, rng);
            }
            r_next = r;
            *o = current;
        }
    }
}

const TILT_HEAD: usize = 4096;

/// Sampler for the terminal law tilted by size, `P(m) ∝ rho B(m, rho + 1) m^alpha`,
/// for `0 < alpha < rho`.
///
/// Inverse CDF on `m <= 4096`; beyond that, rejection from a discretised
/// Pareto law with index `rho - alpha`, which has the same tail decay.
#[derive(Debug, Clone)]
pub struct TiltedTerminal {
    rho: f64,
    alpha: f64,
    /// Unnormalised cumulative weights on `1..=TILT_HEAD`.
    head: Vec<f64>,
    total: f64,
    tail_log_bound: f64,
}

impl TiltedTerminal {
    pub fn new(rho: f64, alpha: f64) -> Result<Self> {
        check_rho(rho, 0.0)?;
        if !(alpha > 0.0 && alpha < rho) {
            return Err(domain!("size tilt needs 0 < alpha < rho, got alpha = {alpha}, rho = {rho}"));
        }
        let mut head = Vec::with_capacity(TILT_HEAD);
        let mut pmf = rho / (rho + 1.0);
        let mut acc = 0.0;
        for m in 1..=TILT_HEAD {
            let mf = m as f64;
            acc += pmf * libm::pow(mf, alpha);
            head.push(acc);
            pmf *= mf / (mf + rho + 1.0);
        }
        let total = ys_moment(alpha, rho)?.max(acc);
        let mut tilted = Self { rho, alpha, head, total, tail_log_bound: 0.0 };
        let beta = rho - alpha;
        let k = TILT_HEAD as f64;
        let limit = libm::log(rho) + ln_gamma(rho + 1.0) - libm::log(beta) - beta * libm::log(k);
        let mut bound = limit;
        let steps = 4000;
        for i in 0..=steps {
            let m = libm::floor(libm::exp(libm::log(k + 1.0) + 36.0 * i as f64 / steps as f64));
            bound = bound.max(tilted.tail_log_ratio(m));
        }
        tilted.tail_log_bound = bound + 1e-3;
        Ok(tilted)
    }

    /// Log of target weight over Pareto proposal mass at `m > TILT_HEAD`.
    fn tail_log_ratio(&self, m: f64) -> f64 {
        let (rho, alpha) = (self.rho, self.alpha);
        let beta = rho - alpha;
        let k = TILT_HEAD as f64;
        let log_target = libm::log(rho) + ln_beta(m, rho + 1.0) + alpha * libm::log(m);
        let log_proposal = beta * libm::log(k / m) + libm::log(libm::expm1(-beta * libm::log1p(-1.0 / m)));
        log_target - log_proposal
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = rng::open01(rng) * self.total;
        let head_mass = self.head[TILT_HEAD - 1];
        if u < head_mass {
            return self.head.partition_point(|&c| c <= u) as u64 + 1;
        }
        let beta = self.rho - self.alpha;
        let k = TILT_HEAD as f64;
        loop {
            let x = k * libm::exp(-libm::log(rng::open01(rng)) / beta);
            let m = libm::ceil(x).max(k + 1.0);
            if m >= rng::COUNT_CEILING {
                return rng::COUNT_CEILING as u64;
            }
            let log_accept = self.tail_log_ratio(m) - self.tail_log_bound;
            if libm::log(rng::open01(rng)) <= log_accept {
                return m as u64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn memory_parameter_bounds() {
        assert!(MemoryParameter::new(0.0).is_err());
        assert!(MemoryParameter::new(1.0).is_err());
        assert!(MemoryParameter::new(f64::NAN).is_err());
        let p = MemoryParameter::new(0.25).unwrap();
        assert_eq!(p.rho(), 4.0);
    }

    #[test]
    fn pmf_values() {
        // 2 B(1, 3) = 2/3
        assert!((ys_pmf(1, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((ys_pmf(2, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        assert!((ys_pmf(3, 2.0).unwrap() - 1.0 / 15.0).abs() < 1e-14);
        // rho / (rho + 1) -> 1
        assert!(ys_pmf(1, 1e9).unwrap() > 1.0 - 1e-8);
        assert!(ys_pmf(0, 2.0).is_err());
        assert!(ys_pmf(1, 0.0).is_err());
        assert!(ys_pmf(1, -1.0).is_err());
    }

    #[test]
    fn pmf_large_k_is_finite() {
        let v = ys_pmf(1_000_000_000, 3.5).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn normalization_with_analytic_tail() {
        let rho = 2.0;
        let k_max = 100_000u64;
        let sum: f64 = (1..=k_max).map(|k| ys_pmf(k, rho).unwrap()).sum();
        // the exact tail P(Y > K) = rho B(K + 1, rho) ~ Gamma(rho + 1) K^-rho
        let tail = ys_tail(k_max + 1, rho).unwrap();
        assert!((sum + tail - 1.0).abs() < 1e-9);
        assert!((tail / (2.0 / (k_max as f64).powi(2)) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tail_matches_pmf_sums() {
        for k in [1u64, 2, 5, 17] {
            let direct: f64 = 1.0 - (1..k).map(|j| ys_pmf(j, 2.7).unwrap()).sum::<f64>();
            assert!((ys_tail(k, 2.7).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        let rho = 4.0;
        assert!((ys_moment(1.0, rho).unwrap() - 4.0 / 3.0).abs() < 1e-9);
        let second = rho * rho / ((rho - 1.0) * (rho - 2.0));
        assert!((ys_moment(2.0, rho).unwrap() - second).abs() < 1e-9);
        assert!((ys_moment(0.0, rho).unwrap() - 1.0).abs() < 1e-10);
        // slowly converging case: q close to rho
        assert!((ys_moment(1.0, 1.5).unwrap() - 3.0).abs() < 1e-6);
        assert!(ys_moment(2.0, 2.0).unwrap().is_infinite());
    }

    #[test]
    fn sample_support_and_errors() {
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..10_000 {
            assert!(ys_sample(1.3, &mut rng).unwrap() >= 1);
        }
        assert!(ys_sample(1.0, &mut rng).is_err());
        assert!(ys_process_sample(0.5, &mut rng).is_err());
    }

    #[test]
    fn sample_mean_at_rho_four() {
        let mut rng = RngStream::new(2, 0).rng();
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| ys_sample(4.0, &mut rng).unwrap() as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 4.0 / 3.0).abs() < 3.0 * libm::sqrt(var / n as f64));
    }

    #[test]
    fn process_paths_are_valid() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..5_000 {
            let path = ys_process_sample(2.0, &mut rng).unwrap();
            let jt = path.jump_times();
            assert!(!jt.is_empty(), "Y(1) >= 1 almost surely");
            assert!(jt[0] > 0.0 && jt[0] <= 1.0);
            assert!(jt.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(path.value(jt[0] * 0.999_999), 0);
            assert_eq!(path.value(0.0), 0);
            for s in [0.1, 0.4, 0.7] {
                assert!(path.value(s) <= path.value(s + 0.2));
            }
        }
    }

    #[test]
    fn process_hits_one_with_probability_t() {
        let mut rng = RngStream::new(4, 0).rng();
        let n = 50_000;
        let paths: Vec<CountingPath> = (0..n).map(|_| ys_process_sample(2.0, &mut rng).unwrap()).collect();
        for t in [0.1, 0.3, 0.6, 0.9] {
            let hit = paths.iter().filter(|p| p.value(t) >= 1).count() as f64 / n as f64;
            let se = libm::sqrt(t * (1.0 - t) / n as f64);
            assert!((hit - t).abs() < 3.5 * se, "t = {t}, hit = {hit}");
        }
    }

    #[test]
    fn mean_and_cross_moment_formulas() {
        assert_eq!(ys_mean(0.0, 3.0).unwrap(), 0.0);
        assert!((ys_mean(1.0, 4.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((ys_mean(0.5, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((ys_cross_moment(1.0, 1.0, 4.0).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert_eq!(ys_cross_moment(0.0, 0.7, 4.0).unwrap(), 0.0);
        let a = ys_cross_moment(0.3, 0.8, 5.0).unwrap();
        let b = ys_cross_moment(0.8, 0.3, 5.0).unwrap();
        assert_eq!(a, b);
        assert!(ys_cross_moment(0.5, 1.0, 2.0).is_err());
        assert!(ys_mean(0.5, 1.0).is_err());
        assert!(ys_mean(1.5, 3.0).is_err());
    }

    #[test]
    fn grid_sampler_matches_event_sampler() {
        // rho > 4 keeps the product Y(0.5) Y(1) square integrable
        let rho = 5.0;
        let times = [0.2, 0.5, 1.0];
        let n = 400_000;
        let mut rng = RngStream::new(5, 0).rng();
        let mut grid_sum = [0.0; 3];
        let mut grid_prod = 0.0;
        let mut grid_prod_sq = 0.0;
        let mut out = [0u64; 3];
        for _ in 0..n {
            sample_on_grid(rho, &times, &mut rng, &mut out);
            for i in 0..3 {
                grid_sum[i] += out[i] as f64;
            }
            let prod = (out[1] * out[2]) as f64;
            grid_prod += prod;
            grid_prod_sq += prod * prod;
            assert!(out[0] <= out[1] && out[1] <= out[2]);
        }
        for (i, t) in times.iter().enumerate() {
            let exact = ys_mean(*t, rho).unwrap();
            // var(Y(t)) = E[Y(t)^2] - E[Y(t)]^2
            let var = ys_cross_moment(*t, *t, rho).unwrap() - exact * exact;
            let se = libm::sqrt(var / n as f64);
            assert!((grid_sum[i] / n as f64 - exact).abs() < 4.0 * se, "t = {t}");
        }
        let cross = ys_cross_moment(0.5, 1.0, rho).unwrap();
        let mean = grid_prod / n as f64;
        let se = libm::sqrt((grid_prod_sq / n as f64 - mean * mean) / n as f64);
        assert!((mean - cross).abs() < 4.0 * se, "{mean} vs {cross}");
    }

    #[test]
    fn bridge_respects_terminal_and_monotonicity() {
        let mut rng = RngStream::new(6, 0).rng();
        let times = [0.1, 0.3, 0.5, 0.9, 1.0];
        let mut out = [0u64; 5];
        for m in [1u64, 2, 7, 1000, 10_000_000_000] {
            for _ in 0..200 {
                bridge_on_grid(2.5, m, &times, &mut rng, &mut out);
                assert_eq!(out[4], m);
                assert!(out.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn tilted_terminal_law() {
        // compare the tilted sampler with the exactly reweighted pmf
        let (rho, alpha) = (3.0, 1.5);
        let tilted = TiltedTerminal::new(rho, alpha).unwrap();
        let norm = ys_moment(alpha, rho).unwrap();
        let mut rng = RngStream::new(7, 0).rng();
        let n = 200_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            let m = tilted.sample(&mut rng) as usize;
            if m <= 5 {
                counts[m] += 1;
            }
        }
        for m in 1..=5u64 {
            let target = ys_pmf(m, rho).unwrap() * (m as f64).powf(alpha) / norm;
            let freq = counts[m as usize] as f64 / n as f64;
            let se = libm::sqrt(target * (1.0 - target) / n as f64);
            assert!((freq - target).abs() < 4.0 * se, "m = {m}: {freq} vs {target}");
        }
    }

    #[test]
    fn tilted_tail_beyond_table() {
        // tail mass P(m > x) against the exact reweighted sum
        let (rho, alpha) = (2.0, 1.5);
        let tilted = TiltedTerminal::new(rho, alpha).unwrap();
        let norm = ys_moment(alpha, rho).unwrap();
        let mut rng = RngStream::new(8, 0).rng();
        let n = 400_000;
        let draws: Vec<u64> = (0..n).map(|_| tilted.sample(&mut rng)).collect();
        for x in [4096u64, 20_000, 100_000] {
            let head: f64 = (1..=x).map(|m| ys_pmf(m, rho).unwrap() * (m as f64).powf(alpha)).sum();
            let target = 1.0 - head / norm;
            let freq = draws.iter().filter(|&&m| m > x).count() as f64 / n as f64;
            let se = libm::sqrt(target * (1.0 - target) / n as f64);
            assert!((freq - target).abs() < 4.0 * se, "x = {x}: {freq} vs {target}");
        }
    }

    #[test]
    fn bridge_with_tilt_reproduces_weighted_expectation() {
        // E_tilt[Y(s) / Y(1)] = E[Y(s) Y(1)^(alpha - 1)] / E[Y(1)^alpha]
        let (rho, alpha) = (5.0, 1.0);
        let times = [0.4, 1.0];
        let n = 200_000;
        let mut rng = RngStream::new(8, 0).rng();
        let tilted = TiltedTerminal::new(rho, alpha).unwrap();
        let mut out = [0u64; 2];
        let mut lhs = 0.0;
        for _ in 0..n {
            let m = tilted.sample(&mut rng);
            bridge_on_grid(rho, m, &times, &mut rng, &mut out);
            lhs += out[0] as f64 / out[1] as f64;
        }
        lhs /= n as f64;
        // alpha = 1: E[Y(0.4)] / E[Y(1)] = 0.4
        assert!((lhs - 0.4).abs() < 0.005, "{lhs}");
    }

    #[test]
    fn counting_path_validation() {
        assert!(CountingPath::from_jump_times(alloc::vec![0.2, 0.2]).is_err());
        assert!(CountingPath::from_jump_times(alloc::vec![0.0]).is_err());
        assert!(CountingPath::from_jump_times(alloc::vec![0.5, 1.1]).is_err());
        let p = CountingPath::from_jump_times(alloc::vec![0.25, 0.5, 1.0]).unwrap();
        assert_eq!(p.value(0.24), 0);
        assert_eq!(p.value(0.25), 1);
        assert_eq!(p.value(1.0), 3);
        let half = p.time_scaled(0.5);
        assert_eq!(half.jump_times(), &[0.5, 1.0]);
    }
}
