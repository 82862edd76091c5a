//! Empirical characteristic functions, Kolmogorov-Smirnov distances and the
//! convergence experiments built on them.
//!
//! Replica `r` of an experiment always draws from its own stream, and
//! results are folded in replica order, so reports do not depend on how a
//! [`ReplicaRunner`] schedules the work.

use crate::error::domain;
use crate::levy::{require_admissible, LevyTriplet};
use crate::noise::{reinforced_cf, CfEstimate, PathSample, Query};
use crate::step::{ReinforcedSkeleton, ReinforcementRecord};
use crate::yule_simon::{ys_process_sample, CountingPath, MemoryParameter};
use crate::{Complex64, Error, Result, RngStream};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Executes independent replicas and returns their results in index order.
pub trait ReplicaRunner {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs replicas one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ReplicaRunner for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Default multiplier of the Monte Carlo standard error in verdicts.
pub const DEFAULT_TOLERANCE_MULT: f64 = 4.0;
/// Final `|ECF|` required by the supercritical verdict.
pub const SUPERCRITICAL_THRESHOLD: f64 = 0.1;

/// The six default queries: `k = 2` at times `(0.5, 1)`, with
/// `(θ, θ)` and `(θ, -θ)` for `θ ∈ {0.5, 1, 2}`.
pub fn default_queries() -> Vec<Query> {
    default_queries_for(1)
}

/// [`default_queries`] in `R^dim`, with every `θ` along the unit diagonal.
pub fn default_queries_for(dim: usize) -> Vec<Query> {
    let unit = 1.0 / libm::sqrt(dim as f64);
    let mut out = Vec::new();
    for theta in [0.5, 1.0, 2.0] {
        for sign in [1.0, -1.0] {
            let mut thetas = vec![theta * unit; dim];
            thetas.extend(core::iter::repeat(sign * theta * unit).take(dim));
            out.push(Query { thetas, times: vec![0.5, 1.0] });
        }
    }
    out
}

/// `(1/R) Σ_r exp(i Σ_j θ_j · x_r(t_j))` for each query.
#[derive(Debug, Clone, PartialEq)]
pub struct EcfEstimate {
    pub queries: Vec<Query>,
    pub estimates: Vec<Complex64>,
    pub replicas: usize,
    /// `1/√R` for every query.
    pub stderr: Vec<f64>,
}

impl EcfEstimate {
    fn from_sums(queries: Vec<Query>, sums: Vec<Complex64>, replicas: usize) -> Self {
        let r = replicas as f64;
        let se = 1.0 / libm::sqrt(r);
        let n = queries.len();
        Self { queries, estimates: sums.into_iter().map(|s| s / r).collect(), replicas, stderr: vec![se; n] }
    }
}

pub fn empirical_cf(samples: &[PathSample], queries: &[Query]) -> Result<EcfEstimate> {
    if samples.is_empty() {
        return Err(domain!("empirical characteristic function of no samples"));
    }
    let mut sums = vec![Complex64::new(0.0, 0.0); queries.len()];
    for s in samples {
        for (acc, q) in sums.iter_mut().zip(queries) {
            *acc += Complex64::new(0.0, q.phase(s)?).exp();
        }
    }
    Ok(EcfEstimate::from_sums(queries.to_vec(), sums, samples.len()))
}

/// Two-sided Kolmogorov-Smirnov statistic against a continuous `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(domain!("Kolmogorov-Smirnov distance of no samples"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        // ties form one jump of the empirical law
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(domain!("Kolmogorov-Smirnov distance of an empty sample"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Distribution function of the centered Cauchy law with the given scale.
pub fn cauchy_cdf(x: f64, scale: f64) -> f64 {
    0.5 + libm::atan(x / scale) / core::f64::consts::PI
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub strictly_decreasing: bool,
    pub final_distance: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    fn from_distances(distances: &[f64], threshold: f64) -> Self {
        let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
        let final_distance = distances.last().copied().unwrap_or(f64::NAN);
        let pass = strictly_decreasing && final_distance < threshold;
        Self { strictly_decreasing, final_distance, threshold, pass }
    }
}

/// Distances between empirical and reference cfs along a mesh schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub schedule: Vec<usize>,
    pub queries: Vec<Query>,
    /// Reference value per query; zero for the supercritical experiment.
    pub reference: Vec<Complex64>,
    /// `ecf[i][q]`: empirical cf at `schedule[i]` and query `q`.
    pub ecf: Vec<Vec<Complex64>>,
    /// `per_query[i][q] = |ecf[i][q] - reference[q]|`.
    pub per_query: Vec<Vec<f64>>,
    /// Supremum over the queries, per mesh.
    pub distances: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: usize,
    pub verdict: Verdict,
}

fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain!("mesh schedule must be positive and strictly increasing"));
    }
    Ok(())
}

/// Empirical cf of the reinforced skeleton `Ŝ^(n)(⌊n t⌋)` at each query.
///
/// Replica `r` draws from `stream.replica(r)`.
pub fn skeleton_ecf<E: ReplicaRunner>(
    triplet: &LevyTriplet,
    p: MemoryParameter,
    queries: &[Query],
    n: usize,
    replicas: usize,
    stream: RngStream,
    runner: &E,
) -> Result<EcfEstimate> {
    if replicas == 0 {
        return Err(domain!("need at least one replica"));
    }
    let dim = triplet.dim();
    if queries.iter().any(|q| q.dim() != dim) {
        return Err(domain!("query dimension does not match the triplet"));
    }
    let skeleton = ReinforcedSkeleton::new(triplet, n, p)?;
    let mut ks: Vec<usize> = queries
        .iter()
        .flat_map(|q| q.times.iter().map(|t| libm::floor(n as f64 * t) as usize))
        .collect();
    ks.sort_unstable();
    ks.dedup();
    let slots: Vec<Vec<usize>> = queries
        .iter()
        .map(|q| {
            q.times
                .iter()
                .map(|t| ks.binary_search(&(libm::floor(n as f64 * t) as usize)).expect("present"))
                .collect()
        })
        .collect();
    let per_replica = runner.map(replicas, |r| {
        let mut rng = stream.replica(r as u64).rng();
        let mut out = vec![0.0; ks.len() * dim];
        skeleton.sample_at(&ks, &mut rng, &mut out);
        queries
            .iter()
            .zip(&slots)
            .map(|(q, slot)| {
                let mut phase = 0.0;
                for (j, &s) in slot.iter().enumerate() {
                    let x = &out[s * dim..(s + 1) * dim];
                    phase += x.iter().zip(q.theta(j)).map(|(a, b)| a * b).sum::<f64>();
                }
                Complex64::new(0.0, phase).exp()
            })
            .collect::<Vec<_>>()
    });
    let mut sums = vec![Complex64::new(0.0, 0.0); queries.len()];
    for row in &per_replica {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    Ok(EcfEstimate::from_sums(queries.to_vec(), sums, replicas))
}

/// Options of [`theorem1_experiment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Options {
    pub tolerance_mult: f64,
    /// Monte Carlo replicas for each reference cf.
    pub cf_replicas: usize,
}

impl Default for Theorem1Options {
    fn default() -> Self {
        Self { tolerance_mult: DEFAULT_TOLERANCE_MULT, cf_replicas: 1_000_000 }
    }
}

/// Distance between the reinforced skeleton and the noise-reinforced
/// process along a mesh schedule.
///
/// Stream layout: the reference cf of query `q` uses `stream.derive(q)`;
/// the skeleton replicas at mesh index `i` use
/// `stream.derive(1000 + i).replica(r)`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_experiment<E: ReplicaRunner>(
    triplet: &LevyTriplet,
    p: MemoryParameter,
    queries: &[Query],
    schedule: &[usize],
    replicas: usize,
    options: Theorem1Options,
    stream: RngStream,
    runner: &E,
) -> Result<ConvergenceReport> {
    require_admissible(p, triplet)?;
    check_schedule(schedule)?;
    let mut reference = Vec::with_capacity(queries.len());
    for (qi, q) in queries.iter().enumerate() {
        reference.push(reinforced_cf(triplet, p, q, options.cf_replicas, stream.derive(qi as u64))?.value);
    }
    let mut ecf = Vec::new();
    for (i, &n) in schedule.iter().enumerate() {
        let est = skeleton_ecf(triplet, p, queries, n, replicas, stream.derive(1000 + i as u64), runner)?;
        ecf.push(est.estimates);
    }
    let threshold = options.tolerance_mult / libm::sqrt(replicas as f64);
    Ok(assemble(schedule, queries, reference, ecf, replicas, threshold))
}

fn assemble(
    schedule: &[usize],
    queries: &[Query],
    reference: Vec<Complex64>,
    ecf: Vec<Vec<Complex64>>,
    replicas: usize,
    threshold: f64,
) -> ConvergenceReport {
    let per_query: Vec<Vec<f64>> = ecf
        .iter()
        .map(|row| row.iter().zip(&reference).map(|(e, r)| (e - r).norm()).collect())
        .collect();
    let distances: Vec<f64> = per_query.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).collect();
    let verdict = Verdict::from_distances(&distances, threshold);
    ConvergenceReport {
        schedule: schedule.to_vec(),
        queries: queries.to_vec(),
        reference,
        ecf,
        per_query,
        stderr: vec![1.0 / libm::sqrt(replicas as f64); schedule.len()],
        distances,
        replicas,
        verdict,
    }
}

/// `|ECF(Ŝ^(n)(n))|` at a single `θ` for a standard one-dimensional
/// `alpha`-stable skeleton, with no precondition on `p`.
///
/// Mesh index `i` uses `stream.derive(1000 + i).replica(r)`.
pub fn stable_endpoint_moduli<E: ReplicaRunner>(
    alpha: f64,
    p: MemoryParameter,
    theta: f64,
    schedule: &[usize],
    replicas: usize,
    stream: RngStream,
    runner: &E,
) -> Result<ConvergenceReport> {
    check_schedule(schedule)?;
    let triplet = LevyTriplet::stable(1, alpha, 1.0)?;
    let queries = vec![Query::scalar(theta, 1.0)];
    let mut ecf = Vec::new();
    for (i, &n) in schedule.iter().enumerate() {
        let est = skeleton_ecf(&triplet, p, &queries, n, replicas, stream.derive(1000 + i as u64), runner)?;
        ecf.push(est.estimates);
    }
    Ok(assemble(schedule, &queries, vec![Complex64::new(0.0, 0.0)], ecf, replicas, SUPERCRITICAL_THRESHOLD))
}

/// Decay of `|ECF(Ŝ^(n)(n))|` beyond the admissible range, `alpha * p > 1`.
/// The verdict requires a strict decrease and a final modulus below
/// [`SUPERCRITICAL_THRESHOLD`].
pub fn supercritical_experiment<E: ReplicaRunner>(
    alpha: f64,
    p: MemoryParameter,
    theta: f64,
    schedule: &[usize],
    replicas: usize,
    stream: RngStream,
    runner: &E,
) -> Result<ConvergenceReport> {
    if !(alpha * p.p() > 1.0) {
        return Err(Error::Misuse(alloc::format!(
            "the supercritical experiment needs alpha * p > 1, got {}",
            alpha * p.p()
        )));
    }
    if theta == 0.0 {
        return Err(Error::Misuse("the supercritical verdict needs θ ≠ 0".to_string()));
    }
    stable_endpoint_moduli(alpha, p, theta, schedule, replicas, stream, runner)
}

/// An admissible run through the supercritical harness, with the limit cf.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastReport {
    pub moduli: ConvergenceReport,
    pub theoretical: CfEstimate,
}

/// [`stable_endpoint_moduli`] together with the reinforced cf at `t = 1`;
/// the latter uses `stream.derive(0)`.
pub fn admissible_contrast<E: ReplicaRunner>(
    alpha: f64,
    p: MemoryParameter,
    theta: f64,
    schedule: &[usize],
    replicas: usize,
    cf_replicas: usize,
    stream: RngStream,
    runner: &E,
) -> Result<ContrastReport> {
    let triplet = LevyTriplet::stable(1, alpha, 1.0)?;
    require_admissible(p, &triplet)?;
    let moduli = stable_endpoint_moduli(alpha, p, theta, schedule, replicas, stream, runner)?;
    let theoretical = reinforced_cf(&triplet, p, &Query::scalar(theta, 1.0), cf_replicas, stream.derive(0))?;
    Ok(ContrastReport { moduli, theoretical })
}

pub type PathFn = Arc<dyn Fn(&CountingPath) -> f64 + Send + Sync>;

/// A named real functional of counting paths.
#[derive(Clone)]
pub struct Functional {
    pub name: String,
    pub f: PathFn,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Functional {
    pub fn new(name: impl Into<String>, f: PathFn) -> Self {
        Self { name: name.into(), f }
    }

    /// `1{ω(1) = k}`, for `k >= 1`.
    pub fn terminal_equals(k: u64) -> Self {
        Self::new(alloc::format!("terminal=={k}"), Arc::new(move |w| (w.terminal() == k) as u8 as f64))
    }

    /// `1{ω(1) >= k}`, for `k >= 1`.
    pub fn terminal_at_least(k: u64) -> Self {
        Self::new(alloc::format!("terminal>={k}"), Arc::new(move |w| (w.terminal() >= k) as u8 as f64))
    }

    pub fn zero() -> Self {
        Self::new("zero", Arc::new(|_| 0.0))
    }

    #[inline]
    pub fn eval(&self, w: &CountingPath) -> f64 {
        (self.f)(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop8Row {
    pub n: usize,
    pub functional: usize,
    pub estimate: f64,
    pub stderr: f64,
    /// `(1-p) E[F(Y)]` by Monte Carlo.
    pub limit: f64,
    pub limit_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop8Report {
    pub schedule: Vec<usize>,
    pub functionals: Vec<String>,
    pub replicas: usize,
    pub rows: Vec<Prop8Row>,
}

/// Averages of `(1/n) Σ_j F(N_j(⌊· n⌋))` over replicas of Simon's dynamics,
/// against `(1-p) E[F(Y)]` estimated from `mc_replicas` Yule-Simon paths.
///
/// Mesh index `i` uses `stream.derive(1000 + i).replica(r)`; the limit uses
/// `stream.derive(0)`.
#[allow(clippy::too_many_arguments)]
pub fn prop8_experiment<E: ReplicaRunner>(
    p: MemoryParameter,
    schedule: &[usize],
    functionals: &[Functional],
    replicas: usize,
    mc_replicas: usize,
    stream: RngStream,
    runner: &E,
) -> Result<Prop8Report> {
    check_schedule(schedule)?;
    if replicas < 2 || mc_replicas < 2 {
        return Err(domain!("need at least two replicas"));
    }
    let zero = CountingPath::zero();
    for f in functionals {
        if f.eval(&zero) != 0.0 {
            return Err(Error::Misuse(alloc::format!("functional {} does not vanish on the zero path", f.name)));
        }
    }
    let nf = functionals.len();
    let rho = p.rho();
    let mut limit_sum = vec![0.0; nf];
    let mut limit_sq = vec![0.0; nf];
    let mut rng = stream.derive(0).rng();
    for _ in 0..mc_replicas {
        let y = ys_process_sample(rho, &mut rng)?;
        for (k, f) in functionals.iter().enumerate() {
            let v = f.eval(&y);
            limit_sum[k] += v;
            limit_sq[k] += v * v;
        }
    }
    let (limit, limit_se) = mean_and_se(&limit_sum, &limit_sq, mc_replicas);
    let scale = 1.0 - p.p();

    let mut rows = Vec::new();
    for (i, &n) in schedule.iter().enumerate() {
        let sub = stream.derive(1000 + i as u64);
        let per_replica: Vec<Result<Vec<f64>>> = runner.map(replicas, |r| {
            let mut rng = sub.replica(r as u64).rng();
            let record = ReinforcementRecord::simulate(n, p, &mut rng)?;
            let mut acc = vec![0.0; nf];
            for j in 1..=n {
                if record.epsilon(j) {
                    continue;
                }
                let path = record.counter_path(j);
                for (a, f) in acc.iter_mut().zip(functionals) {
                    *a += f.eval(&path);
                }
            }
            Ok(acc.into_iter().map(|a| a / n as f64).collect())
        });
        let mut sum = vec![0.0; nf];
        let mut sq = vec![0.0; nf];
        for row in per_replica {
            for (k, v) in row?.into_iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
        }
        let (est, se) = mean_and_se(&sum, &sq, replicas);
        for k in 0..nf {
            rows.push(Prop8Row {
                n,
                functional: k,
                estimate: est[k],
                stderr: se[k],
                limit: scale * limit[k],
                limit_stderr: scale * limit_se[k],
            });
        }
    }
    Ok(Prop8Report {
        schedule: schedule.to_vec(),
        functionals: functionals.iter().map(|f| f.name.clone()).collect(),
        replicas,
        rows,
    })
}

fn mean_and_se(sum: &[f64], sq: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let nn = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nn).collect();
    let se = sum
        .iter()
        .zip(sq)
        .zip(&mean)
        .map(|((_, q), m)| libm::sqrt(((q - nn * m * m) / (nn - 1.0)).max(0.0) / nn))
        .collect();
    (mean, se)
}
