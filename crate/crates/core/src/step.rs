//! Simon's reinforcement dynamics on step sequences.
//!
//! Step 1 is fresh. Each later step `i` repeats, with probability `p`, a
//! uniformly chosen earlier step and otherwise takes the fresh value `X_i`.
//! Repeats are tracked by the base index they descend from, so the counter
//! `N_j(k)` is the number of uses of `X_j` among the first `k` steps.

use crate::error::domain;
use crate::levy::{IncrementSampler, LevyTriplet};
use crate::rng::open01;
use crate::yule_simon::{CountingPath, MemoryParameter};
use crate::{Complex64, Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

/// The randomness of one run of Simon's dynamics, independent of step values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReinforcementRecord {
    n: usize,
    epsilons: Vec<bool>,
    /// 1-based index of the repeated step, 0 for fresh steps.
    choices: Vec<usize>,
    /// 0-based base index used at each step.
    origin: Vec<usize>,
    offsets: Vec<usize>,
    events: Vec<usize>,
}

impl ReinforcementRecord {
    /// Runs the dynamics for `n` steps.
    pub fn simulate<R: Rng + ?Sized>(n: usize, p: MemoryParameter, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(domain!("the number of steps must be positive"));
        }
        let mut epsilons = vec![false; n];
        for e in epsilons.iter_mut().skip(1) {
            *e = open01(rng) < p.p();
        }
        Ok(Self::with_epsilons(epsilons, rng))
    }

    /// Runs the dynamics with prescribed repeat indicators; `epsilons[0]` is
    /// ignored because the first step is always fresh.
    pub fn with_epsilons<R: Rng + ?Sized>(mut epsilons: Vec<bool>, rng: &mut R) -> Self {
        let n = epsilons.len();
        if n > 0 {
            epsilons[0] = false;
        }
        let mut choices = vec![0usize; n];
        let mut origin = vec![0usize; n];
        for i in 0..n {
            if epsilons[i] {
                let u = uniform_below(i, rng);
                choices[i] = u + 1;
                origin[i] = origin[u];
            } else {
                origin[i] = i;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for &o in &origin {
            offsets[o + 1] += 1;
        }
        for j in 0..n {
            offsets[j + 1] += offsets[j];
        }
        let mut fill = offsets.clone();
        let mut events = vec![0usize; n];
        for (i, &o) in origin.iter().enumerate() {
            events[fill[o]] = i + 1;
            fill[o] += 1;
        }
        Self { n, epsilons, choices, origin, offsets, events }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Repeat indicator of step `i` (1-based); always false for `i = 1`.
    #[inline]
    pub fn epsilon(&self, i: usize) -> bool {
        self.epsilons[i - 1]
    }

    pub fn epsilons(&self) -> &[bool] {
        &self.epsilons
    }

    /// Step repeated at step `i` (both 1-based), if any.
    pub fn choice(&self, i: usize) -> Option<usize> {
        match self.choices[i - 1] {
            0 => None,
            c => Some(c),
        }
    }

    /// Base index (1-based) whose value is used at step `i` (1-based).
    #[inline]
    pub fn origin(&self, i: usize) -> usize {
        self.origin[i - 1] + 1
    }

    /// Steps `k` (1-based, increasing) at which base step `j` is used.
    #[inline]
    pub fn counter_events(&self, j: usize) -> &[usize] {
        &self.events[self.offsets[j - 1]..self.offsets[j]]
    }

    /// `N_j(k)`.
    pub fn counter(&self, j: usize, k: usize) -> usize {
        self.counter_events(j).partition_point(|&e| e <= k)
    }

    /// `s ↦ N_j(⌊s n⌋)` as a counting path on `[0, 1]`.
    pub fn counter_path(&self, j: usize) -> CountingPath {
        CountingPath::from_steps(self.counter_events(j), self.n).expect("event steps lie in 1..=n")
    }

    /// All `(j, k)` pairs with a use of base step `j` at step `k`, ordered by `j`.
    pub fn counter_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n).flat_map(move |j| self.counter_events(j).iter().map(move |&k| (j, k)))
    }
}

#[inline]
fn uniform_below<R: Rng + ?Sized>(i: usize, rng: &mut R) -> usize {
    rng.random_range(0..i)
}

/// A reinforced walk `Ŝ(0..=n)` in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReinforcedWalk {
    dim: usize,
    record: Option<ReinforcementRecord>,
    base_steps: Vec<f64>,
    partial_sums: Vec<f64>,
}

impl ReinforcedWalk {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.partial_sums.len() / self.dim - 1
    }

    /// The reinforcement record; `None` for walks generated from their
    /// Markov-chain representation.
    pub fn record(&self) -> Option<&ReinforcementRecord> {
        self.record.as_ref()
    }

    /// Fresh steps `X_1..X_n`, flattened; empty when there is no record.
    pub fn base_steps(&self) -> &[f64] {
        &self.base_steps
    }

    /// `Ŝ(k)`.
    pub fn partial_sum(&self, k: usize) -> &[f64] {
        &self.partial_sums[k * self.dim..(k + 1) * self.dim]
    }

    /// `Ŝ(k) - Ŝ(k - 1)`, for `k >= 1`.
    pub fn step(&self, k: usize) -> Vec<f64> {
        let a = self.partial_sum(k - 1);
        let b = self.partial_sum(k);
        b.iter().zip(a).map(|(x, y)| x - y).collect()
    }
}

/// Applies Simon's dynamics to `steps`, a flattened list of `n` vectors in `R^dim`.
pub fn reinforce<R: Rng + ?Sized>(
    steps: Vec<f64>,
    dim: usize,
    p: MemoryParameter,
    rng: &mut R,
) -> Result<ReinforcedWalk> {
    check_steps(&steps, dim)?;
    let record = ReinforcementRecord::simulate(steps.len() / dim, p, rng)?;
    Ok(assemble(steps, dim, record))
}

/// [`reinforce`] with prescribed repeat indicators.
pub fn reinforce_with_epsilons<R: Rng + ?Sized>(
    steps: Vec<f64>,
    dim: usize,
    epsilons: Vec<bool>,
    rng: &mut R,
) -> Result<ReinforcedWalk> {
    check_steps(&steps, dim)?;
    if epsilons.len() * dim != steps.len() {
        return Err(domain!("need one repeat indicator per step"));
    }
    let record = ReinforcementRecord::with_epsilons(epsilons, rng);
    Ok(assemble(steps, dim, record))
}

fn check_steps(steps: &[f64], dim: usize) -> Result<()> {
    if dim == 0 || steps.is_empty() || steps.len() % dim != 0 {
        return Err(domain!(
            "steps must be a nonempty list of {dim}-vectors, got {} values",
            steps.len()
        ));
    }
    Ok(())
}

fn assemble(steps: Vec<f64>, dim: usize, record: ReinforcementRecord) -> ReinforcedWalk {
    let n = record.n;
    let mut partial_sums = vec![0.0; (n + 1) * dim];
    for k in 1..=n {
        let o = record.origin[k - 1];
        for c in 0..dim {
            partial_sums[k * dim + c] = partial_sums[(k - 1) * dim + c] + steps[o * dim + c];
        }
    }
    ReinforcedWalk { dim, record: Some(record), base_steps: steps, partial_sums }
}

/// `(1/n) Σ_j F(N_j(⌊· n⌋))`, each counter rescaled to `[0, 1]`.
///
/// `F` must vanish on the zero path, so only the counters of fresh steps
/// are evaluated.
pub fn empirical_functional<F>(record: &ReinforcementRecord, mut f: F) -> Result<Complex64>
where
    F: FnMut(&CountingPath) -> Complex64,
{
    if f(&CountingPath::zero()) != Complex64::new(0.0, 0.0) {
        return Err(Error::Misuse("the functional must vanish on the zero path".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..=record.n {
        if !record.epsilons[j - 1] {
            acc += f(&record.counter_path(j));
        }
    }
    Ok(acc / record.n as f64)
}

/// Elephant random walk from its Markov-chain representation: the first
/// step is ±1 with probability 1/2, and given `Ŝ(k)` the next step is +1
/// with probability `1/2 + p Ŝ(k) / (2k)`.
pub fn elephant_walk<R: Rng + ?Sized>(n: usize, p: MemoryParameter, rng: &mut R) -> Result<ReinforcedWalk> {
    if n == 0 {
        return Err(domain!("the number of steps must be positive"));
    }
    let mut partial_sums = vec![0.0; n + 1];
    let mut s: i64 = 0;
    for k in 0..n {
        let up = if k == 0 {
            0.5
        } else {
            0.5 + p.p() * s as f64 / (2.0 * k as f64)
        };
        s += if open01(rng) < up { 1 } else { -1 };
        partial_sums[k + 1] = s as f64;
    }
    Ok(ReinforcedWalk { dim: 1, record: None, base_steps: Vec::new(), partial_sums })
}

/// `n` i.i.d. increments `ξ(1/n)` of the triplet, reinforced with parameter `p`.
pub fn skeleton_reinforced_walk<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    n: usize,
    p: MemoryParameter,
    rng: &mut R,
) -> Result<ReinforcedWalk> {
    if n == 0 {
        return Err(domain!("the mesh must be positive"));
    }
    let sampler = IncrementSampler::new(triplet, 1.0 / n as f64)?;
    let dim = triplet.dim();
    let mut steps = vec![0.0; n * dim];
    for x in steps.chunks_mut(dim) {
        sampler.sample(rng, x);
    }
    reinforce(steps, dim, p, rng)
}

/// Values of a reinforced skeleton at a few times, without keeping the record.
///
/// Fresh increments are only drawn for steps that are not repeats, which is
/// a `1 - p` fraction of the work of [`skeleton_reinforced_walk`]. The law
/// is the same; the draws are not.
#[derive(Debug, Clone)]
pub struct ReinforcedSkeleton {
    sampler: IncrementSampler,
    n: usize,
    p: MemoryParameter,
}

impl ReinforcedSkeleton {
    pub fn new(triplet: &LevyTriplet, n: usize, p: MemoryParameter) -> Result<Self> {
        if n == 0 {
            return Err(domain!("the mesh must be positive"));
        }
        let sampler = IncrementSampler::new(triplet, 1.0 / n as f64)?;
        Ok(Self { sampler, n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.sampler.dim()
    }

    /// Writes `Ŝ(k)` for each `k` in `ks` (nondecreasing, at most `n`)
    /// into consecutive `dim`-blocks of `out`.
    pub fn sample_at<R: Rng + ?Sized>(&self, ks: &[usize], rng: &mut R, out: &mut [f64]) {
        let dim = self.dim();
        debug_assert_eq!(out.len(), ks.len() * dim);
        debug_assert!(ks.windows(2).all(|w| w[0] <= w[1]));
        let last = ks.last().copied().unwrap_or(0).min(self.n);
        let mut steps = vec![0.0; last * dim];
        let mut sum = vec![0.0; dim];
        let mut next = 0;
        while next < ks.len() && ks[next] == 0 {
            out[next * dim..(next + 1) * dim].fill(0.0);
            next += 1;
        }
        for i in 0..last {
            if i > 0 && open01(rng) < self.p.p() {
                let u = uniform_below(i, rng);
                steps.copy_within(u * dim..(u + 1) * dim, i * dim);
            } else {
                self.sampler.sample(rng, &mut steps[i * dim..(i + 1) * dim]);
            }
            for (s, x) in sum.iter_mut().zip(&steps[i * dim..(i + 1) * dim]) {
                *s += x;
            }
            while next < ks.len() && ks[next] == i + 1 {
                out[next * dim..(next + 1) * dim].copy_from_slice(&sum);
                next += 1;
            }
        }
    }
}
