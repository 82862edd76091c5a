//! Noise-reinforced Brownian motion and noise-reinforced Lévy processes.
//!
//! A noise-reinforced Lévy process with characteristics `(M, a, Λ, p)` is
//! `M B̂(t) + t a` plus a compensated sum of jumps `Y_j(t) x_j`, where
//! `(x_j, Y_j)` are the atoms of a Poisson measure with intensity
//! `(1 - p) Λ ⊗ Q` and `Q` is the law of a Yule-Simon process with
//! parameter `1 / p`.
//!
//! Stable jump parts are sampled with a mark-first scheme. Every atom with
//! `|x| Y(1) >= eps` is simulated exactly; this set contains all atoms with
//! `|x| >= eps`. The remaining small atoms form a centered process whose
//! covariance is known in closed form up to one tilted Yule-Simon moment,
//! and they are replaced by a Gaussian process with that covariance.

use crate::error::domain;
use crate::levy::{bg_index, require_admissible, stable_radial_mass, JumpMeasure, LevyTriplet};
use crate::linalg::{cholesky_with_jitter, mat_vec, psd_factor};
use crate::rng::{self, open01, std_normal};
use crate::yule_simon::{
    sample_on_grid, sample_on_grid_from, ys_cross_moment, ys_mean, ys_moment,
    ys_process_sample, CountingPath, MemoryParameter, TiltedTerminal, YuleBridge,
};
use crate::{Complex64, Error, Result, RngStream};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

/// Default truncation level of [`NrlpConfig`].
pub const DEFAULT_EPS: f64 = 1e-2;
/// Residual bound above which the sampler logs a warning.
pub const TRUNCATION_BUDGET: f64 = 1e-3;
/// Tilted samples used to calibrate the small-jump covariance.
pub const CALIBRATION_SAMPLES: usize = 200_000;

/// A `dim`-dimensional path observed on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    times: Vec<f64>,
    dim: usize,
    values: Vec<f64>,
}

impl PathSample {
    /// `values` holds one `dim`-block per time.
    pub fn new(times: Vec<f64>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != times.len() * dim {
            return Err(domain!(
                "{} values do not fill {} times in dimension {dim}",
                values.len(),
                times.len()
            ));
        }
        Ok(Self { times, dim, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at the `i`-th grid time.
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Value at grid time `t`, if `t` is on the grid.
    pub fn value_at(&self, t: f64) -> Option<&[f64]> {
        self.times.iter().position(|&s| s == t).map(|i| self.value(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(domain!("time grid is empty"));
    }
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(domain!("grid times must lie in [0, 1]"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain!("grid times must be nondecreasing"));
    }
    Ok(())
}

/// `Cov(B̂(s), B̂(t)) = t^p s^{1-p} / (1 - 2p)` for `s <= t`.
pub fn nrbm_covariance(s: f64, t: f64, p: f64) -> f64 {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s == 0.0 {
        return 0.0;
    }
    libm::pow(t, p) * libm::pow(s, 1.0 - p) / (1.0 - 2.0 * p)
}

/// Exact sampler of noise-reinforced Brownian motion on a fixed grid.
#[derive(Debug, Clone)]
pub struct NrbmSampler {
    grid: Vec<f64>,
    dim: usize,
    /// Lower-triangular factor over the positive grid times.
    factor: Vec<f64>,
    first_positive: usize,
}

impl NrbmSampler {
    pub fn new(p: MemoryParameter, grid: &[f64], dim: usize) -> Result<Self> {
        if p.p() >= 0.5 {
            return Err(Error::Inadmissible { p: p.p(), beta: 2.0 });
        }
        if dim == 0 {
            return Err(domain!("dimension must be positive"));
        }
        check_grid(grid)?;
        let first_positive = grid.partition_point(|&t| t == 0.0);
        let pos = &grid[first_positive..];
        let g = pos.len();
        let mut cov = vec![0.0; g * g];
        for i in 0..g {
            for j in 0..g {
                cov[i * g + j] = nrbm_covariance(pos[i], pos[j], p.p());
            }
        }
        let factor = if g == 0 { Vec::new() } else { cholesky_with_jitter(&cov, g)? };
        Ok(Self { grid: grid.to_vec(), dim, factor, first_positive })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Adds one path to `out`, laid out time-major with `dim` coordinates.
    pub fn add_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let g = self.grid.len() - self.first_positive;
        let mut z = vec![0.0; g];
        let mut x = vec![0.0; g];
        for c in 0..self.dim {
            for v in z.iter_mut() {
                *v = std_normal(rng);
            }
            mat_vec(&self.factor, g, g, &z, &mut x);
            for (i, xi) in x.iter().enumerate() {
                out[(self.first_positive + i) * self.dim + c] += xi;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSample {
        let mut values = vec![0.0; self.grid.len() * self.dim];
        self.add_into(rng, &mut values);
        PathSample { times: self.grid.clone(), dim: self.dim, values }
    }
}

/// One noise-reinforced Brownian path in `R^dim` on `grid`.
pub fn nrbm_sample<R: Rng + ?Sized>(p: MemoryParameter, grid: &[f64], dim: usize, rng: &mut R) -> Result<PathSample> {
    Ok(NrbmSampler::new(p, grid, dim)?.sample(rng))
}

/// Treatment of the atoms below the truncation level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmallJumps {
    /// Replace them by a Gaussian process with the same covariance.
    #[default]
    Gaussian,
    /// Discard them.
    Drop,
}

/// A validated noise-reinforced Lévy process configuration.
#[derive(Debug, Clone)]
pub struct NrlpConfig {
    triplet: LevyTriplet,
    p: MemoryParameter,
    truncation_eps: f64,
    grid: Vec<f64>,
    small_jumps: SmallJumps,
}

impl NrlpConfig {
    /// Rejects inadmissible `(p, triplet)` pairs.
    pub fn new(triplet: LevyTriplet, p: MemoryParameter, truncation_eps: f64, grid: Vec<f64>) -> Result<Self> {
        require_admissible(p, &triplet)?;
        if !(truncation_eps > 0.0 && truncation_eps < 1.0) {
            return Err(domain!("truncation level must lie in (0, 1), got {truncation_eps}"));
        }
        check_grid(&grid)?;
        Ok(Self { triplet, p, truncation_eps, grid, small_jumps: SmallJumps::default() })
    }

    pub fn with_small_jumps(mut self, mode: SmallJumps) -> Self {
        self.small_jumps = mode;
        self
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn p(&self) -> MemoryParameter {
        self.p
    }

    pub fn truncation_eps(&self) -> f64 {
        self.truncation_eps
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn small_jumps(&self) -> SmallJumps {
        self.small_jumps
    }
}

/// One atom `(x_j, Y_j)` of the marked Poisson measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedAtom {
    pub jump: Vec<f64>,
    pub mark: CountingPath,
}

fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut r2 = 0.0;
        for o in out.iter_mut() {
            *o = std_normal(rng);
            r2 += *o * *o;
        }
        if r2 > 0.0 {
            let r = libm::sqrt(r2);
            out.iter_mut().for_each(|o| *o /= r);
            return;
        }
    }
}

fn flatten_parts<'a>(jumps: &'a JumpMeasure, out: &mut Vec<&'a JumpMeasure>) {
    match jumps {
        JumpMeasure::Sum(parts) => parts.iter().for_each(|p| flatten_parts(p, out)),
        JumpMeasure::Zero => {}
        other => out.push(other),
    }
}

/// The atoms with `|x| >= eps`, each carrying an independent Yule-Simon mark.
pub fn sample_atoms<R: Rng + ?Sized>(config: &NrlpConfig, rng: &mut R) -> Result<Vec<MarkedAtom>> {
    let dim = config.triplet.dim();
    let eps = config.truncation_eps;
    let one_minus_p = 1.0 - config.p.p();
    let rho = config.p.rho();
    let mut parts = Vec::new();
    flatten_parts(config.triplet.jumps(), &mut parts);
    let mut atoms = Vec::new();
    for part in parts {
        match part {
            JumpMeasure::IsotropicStable { alpha, scale } => {
                let k = one_minus_p * stable_radial_mass(*alpha, *scale, dim);
                let count = rng::poisson(k / alpha * libm::pow(eps, -alpha), rng);
                for _ in 0..count {
                    let r = eps * libm::pow(open01(rng), -1.0 / alpha);
                    let mut jump = vec![0.0; dim];
                    uniform_direction(rng, &mut jump);
                    jump.iter_mut().for_each(|x| *x *= r);
                    atoms.push(MarkedAtom { jump, mark: ys_process_sample(rho, rng)? });
                }
            }
            JumpMeasure::FiniteAtomic { atoms: list } => {
                let kept: Vec<_> = list.iter().filter(|a| crate::linalg::norm(&a.location) >= eps).collect();
                let total: f64 = kept.iter().map(|a| a.mass).sum::<f64>() * one_minus_p;
                let count = rng::poisson(total, rng);
                for _ in 0..count {
                    let mut u = open01(rng) * total;
                    let mut pick = kept[kept.len() - 1];
                    for a in &kept {
                        u -= a.mass * one_minus_p;
                        if u < 0.0 {
                            pick = a;
                            break;
                        }
                    }
                    atoms.push(MarkedAtom { jump: pick.location.clone(), mark: ys_process_sample(rho, rng)? });
                }
            }
            JumpMeasure::RadialDensity { .. } => {
                return Err(Error::UnsupportedFamily("radial density measures cannot be sampled"))
            }
            JumpMeasure::Zero | JumpMeasure::Sum(_) => unreachable!("flattened"),
        }
    }
    Ok(atoms)
}

/// Size of the truncation error of an [`NrlpSampler`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub eps: f64,
    pub mode: SmallJumps,
    /// Expected number of simulated atoms per path.
    pub expected_atoms: f64,
    /// Per-coordinate variance at `t = 1` of the atoms below the cutoff.
    pub remainder_variance: f64,
    /// For [`SmallJumps::Gaussian`], a bound on the fourth cumulant of
    /// `θ·(remainder)` at `t = 1` for `|θ| = 1`; for [`SmallJumps::Drop`],
    /// the dropped variance.
    pub residual_cumulant_bound: f64,
}

impl TruncationReport {
    pub fn within_budget(&self) -> bool {
        self.residual_cumulant_bound <= TRUNCATION_BUDGET
    }
}

#[derive(Debug, Clone)]
struct StablePart {
    alpha: f64,
    rate: f64,
    tilted: TiltedTerminal,
    /// Factor of the per-coordinate remainder covariance over the grid.
    remainder: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct AtomicPart {
    locations: Vec<f64>,
    cumulative: Vec<f64>,
    compensation: Vec<f64>,
}

/// Reusable sampler of a noise-reinforced Lévy process on a fixed grid.
#[derive(Debug, Clone)]
pub struct NrlpSampler {
    dim: usize,
    grid: Vec<f64>,
    rho: f64,
    bridge: YuleBridge,
    eps: f64,
    gaussian: Option<(NrbmSampler, Vec<f64>)>,
    drift: Vec<f64>,
    stable: Vec<StablePart>,
    atomic: Vec<AtomicPart>,
    report: TruncationReport,
}

impl NrlpSampler {
    /// `calibration` seeds the Monte Carlo estimate of the small-jump
    /// covariance; it is independent of the path streams.
    pub fn new(config: &NrlpConfig, calibration: RngStream) -> Result<Self> {
        let triplet = &config.triplet;
        let dim = triplet.dim();
        let p = config.p;
        let rho = p.rho();
        let eps = config.truncation_eps;
        let grid = config.grid.clone();
        let gaussian = if triplet.has_gaussian_part() {
            Some((NrbmSampler::new(p, &grid, dim)?, triplet.gaussian_factor().to_vec()))
        } else {
            None
        };
        let drift = triplet.drift().to_vec();
        let mut parts = Vec::new();
        flatten_parts(triplet.jumps(), &mut parts);
        let mut stable = Vec::new();
        let mut atomic = Vec::new();
        let mut report = TruncationReport {
            eps,
            mode: config.small_jumps,
            expected_atoms: 0.0,
            remainder_variance: 0.0,
            residual_cumulant_bound: 0.0,
        };
        let mut cal_rng = calibration.rng();
        let g = grid.len();
        for part in parts {
            match part {
                JumpMeasure::IsotropicStable { alpha, scale } => {
                    let alpha = *alpha;
                    let k = (1.0 - p.p()) * stable_radial_mass(alpha, *scale, dim);
                    let moment = ys_moment(alpha, rho)?;
                    let rate = k / alpha * libm::pow(eps, -alpha) * moment;
                    let tilted = TiltedTerminal::new(rho, alpha)?;
                    let var_scale = k / (dim as f64 * (2.0 - alpha)) * libm::pow(eps, 2.0 - alpha) * moment;
                    let kappa4 = k / (4.0 - alpha) * libm::pow(eps, 4.0 - alpha) * moment;
                    report.expected_atoms += rate;
                    report.remainder_variance += var_scale;
                    report.residual_cumulant_bound += match config.small_jumps {
                        SmallJumps::Gaussian => kappa4,
                        SmallJumps::Drop => var_scale,
                    };
                    let remainder = match config.small_jumps {
                        SmallJumps::Drop => None,
                        SmallJumps::Gaussian => {
                            let cov = tilted_ratio_moments(rho, &tilted, &grid, &mut cal_rng);
                            let cov: Vec<f64> = cov.iter().map(|c| c * var_scale).collect();
                            Some(psd_factor(&cov, g)?)
                        }
                    };
                    stable.push(StablePart { alpha, rate, tilted, remainder });
                }
                JumpMeasure::FiniteAtomic { atoms } => {
                    if atoms.is_empty() {
                        continue;
                    }
                    let mut locations = Vec::with_capacity(atoms.len() * dim);
                    let mut cumulative = Vec::with_capacity(atoms.len());
                    let mut acc = 0.0;
                    for a in atoms {
                        locations.extend_from_slice(&a.location);
                        acc += (1.0 - p.p()) * a.mass;
                        cumulative.push(acc);
                    }
                    report.expected_atoms += acc;
                    // ρ/(ρ-1) ∫_{|x|<1} x ν(dx) = ∫_{|x|<1} x Λ(dx)
                    let compensation = part.small_jump_mean(dim);
                    atomic.push(AtomicPart { locations, cumulative, compensation });
                }
                JumpMeasure::RadialDensity { .. } => {
                    return Err(Error::UnsupportedFamily("radial density measures cannot be sampled"))
                }
                JumpMeasure::Zero | JumpMeasure::Sum(_) => unreachable!("flattened"),
            }
        }
        if !report.within_budget() {
            log::warn!(
                "truncation at eps = {eps} leaves a residual of {:.3e}, above the budget {TRUNCATION_BUDGET:e}",
                report.residual_cumulant_bound
            );
        }
        Ok(Self { dim, grid, rho, bridge: YuleBridge::new(rho), eps, gaussian, drift, stable, atomic, report })
    }

    pub fn report(&self) -> &TruncationReport {
        &self.report
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes one path into `out` (time-major, `grid.len() * dim` entries).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let (g, d) = (self.grid.len(), self.dim);
        debug_assert_eq!(out.len(), g * d);
        for (i, t) in self.grid.iter().enumerate() {
            for c in 0..d {
                out[i * d + c] = t * self.drift[c];
            }
        }
        if let Some((nrbm, m)) = &self.gaussian {
            let mut b = vec![0.0; g * d];
            nrbm.add_into(rng, &mut b);
            let mut mb = vec![0.0; d];
            for i in 0..g {
                mat_vec(m, d, d, &b[i * d..(i + 1) * d], &mut mb);
                for c in 0..d {
                    out[i * d + c] += mb[c];
                }
            }
        }
        let mut marks = vec![0u64; g];
        let mut dir = vec![0.0; d];
        for part in &self.stable {
            let count = rng::poisson(part.rate, rng);
            for _ in 0..count {
                let m = part.tilted.sample(rng);
                self.bridge.sample(m, &self.grid, rng, &mut marks);
                let v = open01(rng);
                let spread = if part.alpha == 1.0 { 1.0 / v } else { libm::pow(v, -1.0 / part.alpha) };
                let r = self.eps / m as f64 * spread;
                uniform_direction(rng, &mut dir);
                for (i, &y) in marks.iter().enumerate() {
                    if y > 0 {
                        let w = y as f64 * r;
                        for c in 0..d {
                            out[i * d + c] += w * dir[c];
                        }
                    }
                }
            }
            if let Some(factor) = &part.remainder {
                let mut z = vec![0.0; g];
                let mut x = vec![0.0; g];
                for c in 0..d {
                    z.iter_mut().for_each(|v| *v = std_normal(rng));
                    mat_vec(factor, g, g, &z, &mut x);
                    for i in 0..g {
                        out[i * d + c] += x[i];
                    }
                }
            }
        }
        for part in &self.atomic {
            let total = *part.cumulative.last().expect("nonempty");
            let count = rng::poisson(total, rng);
            for _ in 0..count {
                let u = open01(rng) * total;
                let a = part.cumulative.partition_point(|&c| c <= u).min(part.cumulative.len() - 1);
                let x = &part.locations[a * d..(a + 1) * d];
                sample_on_grid(self.rho, &self.grid, rng, &mut marks);
                for (i, &y) in marks.iter().enumerate() {
                    if y > 0 {
                        for c in 0..d {
                            out[i * d + c] += y as f64 * x[c];
                        }
                    }
                }
            }
            for (i, t) in self.grid.iter().enumerate() {
                for c in 0..d {
                    out[i * d + c] -= t * part.compensation[c];
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSample {
        let mut values = vec![0.0; self.grid.len() * self.dim];
        self.sample_into(rng, &mut values);
        PathSample { times: self.grid.clone(), dim: self.dim, values }
    }
}

/// Monte Carlo estimate of `E_tilt[Y(s) Y(t) / Y(1)²]` over grid pairs,
/// under the terminal law tilted by `Y(1)^alpha`.
fn tilted_ratio_moments<R: Rng + ?Sized>(rho: f64, tilted: &TiltedTerminal, grid: &[f64], rng: &mut R) -> Vec<f64> {
    let g = grid.len();
    let mut acc = vec![0.0; g * g];
    let mut marks = vec![0u64; g];
    let mut ratio = vec![0.0; g];
    let bridge = YuleBridge::new(rho);
    for _ in 0..CALIBRATION_SAMPLES {
        let m = tilted.sample(rng);
        bridge.sample(m, grid, rng, &mut marks);
        for (r, y) in ratio.iter_mut().zip(&marks) {
            *r = *y as f64 / m as f64;
        }
        for i in 0..g {
            for j in 0..g {
                acc[i * g + j] += ratio[i] * ratio[j];
            }
        }
    }
    acc.iter_mut().for_each(|a| *a /= CALIBRATION_SAMPLES as f64);
    acc
}

/// One path of the configured process. Builds a fresh [`NrlpSampler`];
/// reuse a sampler when drawing many paths.
pub fn nrlp_sample<R: Rng + ?Sized>(config: &NrlpConfig, rng: &mut R) -> Result<PathSample> {
    let calibration = RngStream::new(rng.next_u64(), 0);
    Ok(NrlpSampler::new(config, calibration)?.sample(rng))
}

/// A finite-dimensional query `(θ_1..θ_k, t_1..t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    /// `k` blocks of length `dim`.
    pub thetas: Vec<f64>,
    pub times: Vec<f64>,
}

impl Query {
    pub fn new(thetas: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() || thetas.len() % times.len() != 0 || thetas.is_empty() {
            return Err(domain!("a query needs one θ block per time"));
        }
        if times.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(domain!("query times must lie in [0, 1]"));
        }
        if thetas.iter().any(|x| !x.is_finite()) {
            return Err(domain!("query θ must be finite"));
        }
        Ok(Self { thetas, times })
    }

    /// Scalar query in dimension 1.
    pub fn scalar(theta: f64, t: f64) -> Self {
        Self { thetas: vec![theta], times: vec![t] }
    }

    pub fn k(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.thetas.len() / self.times.len()
    }

    pub fn theta(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.thetas[j * d..(j + 1) * d]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { thetas: self.thetas.iter().map(|x| c * x).collect(), times: self.times.clone() }
    }

    /// `Σ_j θ_j · x(t_j)` for a path sample containing every query time.
    pub fn phase(&self, sample: &PathSample) -> Result<f64> {
        let mut acc = 0.0;
        for (j, &t) in self.times.iter().enumerate() {
            let x = sample
                .value_at(t)
                .ok_or_else(|| domain!("query time {t} is not on the sample grid"))?;
            acc += x.iter().zip(self.theta(j)).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(acc)
    }
}

/// Monte Carlo evaluation of `exp{-(1-p) E[Ψ(Σ_j Y(t_j) θ_j)]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfEstimate {
    pub value: Complex64,
    /// `(1-p) E[Ψ(Σ_j Y(t_j) θ_j)]`.
    pub exponent: Complex64,
    /// Standard error of `exponent`.
    pub exponent_stderr: f64,
    /// Standard error of `value`, by the delta method.
    pub stderr: f64,
    pub replicas: usize,
    /// Running means of the inner expectation kept growing.
    pub divergent: bool,
}

/// Reinforced characteristic function at `query` with Monte Carlo inner
/// expectation. Admissibility is not required, so the blow-up of the inner
/// expectation can be observed through [`CfEstimate::divergent`].
///
/// The Gaussian and drift contributions use the closed-form first and
/// second moments of the Yule-Simon process. The jump contribution is
/// estimated from `replicas` grid draws of `Y`, with the first-jump time
/// `U` drawn as `V^m` and reweighted by `m V^{m-1}` to flatten the heavy
/// tail of `Ψ(Y θ)`.
pub fn reinforced_cf(
    triplet: &LevyTriplet,
    p: MemoryParameter,
    query: &Query,
    replicas: usize,
    stream: RngStream,
) -> Result<CfEstimate> {
    let dim = triplet.dim();
    if query.dim() != dim {
        return Err(domain!("query dimension {} does not match the triplet dimension {dim}", query.dim()));
    }
    let rho = p.rho();
    let k = query.k();
    let one_minus_p = 1.0 - p.p();

    let mut closed = Complex64::new(0.0, 0.0);
    if triplet.has_gaussian_part() {
        let mut mt = vec![0.0; k * dim];
        for j in 0..k {
            crate::linalg::mat_t_vec(triplet.gaussian_factor(), dim, dim, query.theta(j), &mut mt[j * dim..(j + 1) * dim]);
        }
        for j in 0..k {
            for l in 0..k {
                let ip: f64 = (0..dim).map(|c| mt[j * dim + c] * mt[l * dim + c]).sum();
                if ip != 0.0 {
                    closed.re += 0.5 * ip * ys_cross_moment(query.times[j], query.times[l], rho)?;
                }
            }
        }
    }
    for j in 0..k {
        let at: f64 = triplet.drift().iter().zip(query.theta(j)).map(|(a, b)| a * b).sum();
        if at != 0.0 {
            closed.im -= at * ys_mean(query.times[j], rho)?;
        }
    }

    let jumps = triplet.jumps();
    let (mean, se, divergent, used) = if matches!(jumps, JumpMeasure::Zero) || query.thetas.iter().all(|&x| x == 0.0) {
        (Complex64::new(0.0, 0.0), 0.0, false, 0)
    } else {
        if replicas == 0 {
            return Err(domain!("Monte Carlo needs at least one replica"));
        }
        jump_expectation(jumps, rho, query, replicas, stream)?
    };
    let exponent = (closed + mean) * one_minus_p;
    let value = (-exponent).exp();
    let exponent_stderr = one_minus_p * se;
    Ok(CfEstimate {
        value,
        exponent,
        exponent_stderr,
        stderr: value.norm() * exponent_stderr,
        replicas: used,
        divergent,
    })
}

fn growth_exponent(jumps: &JumpMeasure) -> f64 {
    jumps.bg_index()
}

fn jump_expectation(
    jumps: &JumpMeasure,
    rho: f64,
    query: &Query,
    replicas: usize,
    stream: RngStream,
) -> Result<(Complex64, f64, bool, usize)> {
    let dim = query.dim();
    let k = query.k();
    let p = 1.0 / rho;
    let gamma = growth_exponent(jumps);
    let m = if gamma > 0.0 && p * gamma < 1.0 { 1.0 / (1.0 - p * gamma) } else { 1.0 };

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| query.times[a].total_cmp(&query.times[b]));
    let sorted_times: Vec<f64> = order.iter().map(|&j| query.times[j]).collect();
    let mut ys = vec![0u64; k];
    let mut arg = vec![0.0; dim];
    let mut rng = stream.rng();

    let (mut sum_re, mut sum_im, mut sq_re, mut sq_im) = (0.0, 0.0, 0.0, 0.0);
    let checkpoints = [replicas / 4, replicas / 2];
    let mut running = [0.0f64; 2];
    for r in 0..replicas {
        let v = open01(&mut rng);
        let (u, w) = if m == 1.0 { (v, 1.0) } else { (libm::pow(v, m), m * libm::pow(v, m - 1.0)) };
        sample_on_grid_from(rho, u, &sorted_times, &mut rng, &mut ys);
        arg.iter_mut().for_each(|a| *a = 0.0);
        for (pos, &j) in order.iter().enumerate() {
            let y = ys[pos] as f64;
            if y > 0.0 {
                for (a, th) in arg.iter_mut().zip(query.theta(j)) {
                    *a += y * th;
                }
            }
        }
        let psi = jumps.exponent(&arg)? * w;
        sum_re += psi.re;
        sum_im += psi.im;
        sq_re += psi.re * psi.re;
        sq_im += psi.im * psi.im;
        for (c, slot) in checkpoints.iter().zip(running.iter_mut()) {
            if r + 1 == *c {
                *slot = sum_re / *c as f64;
            }
        }
    }
    let n = replicas as f64;
    let mean = Complex64::new(sum_re / n, sum_im / n);
    let var = if replicas > 1 {
        ((sq_re - n * mean.re * mean.re) + (sq_im - n * mean.im * mean.im)) / (n - 1.0)
    } else {
        0.0
    };
    let se = libm::sqrt(var.max(0.0) / n);
    // growth at both doublings, by more than 1.5 overall
    let divergent = replicas >= 8
        && running[0] > 0.0
        && running[1] > running[0]
        && mean.re > running[1]
        && mean.re / running[0] > 1.5;
    if divergent {
        log::warn!(
            "inner expectation E[Re Ψ] keeps growing ({:.4e}, {:.4e}, {:.4e} at {}, {}, {} replicas)",
            running[0],
            running[1],
            mean.re,
            checkpoints[0],
            checkpoints[1],
            replicas
        );
    }
    Ok((mean, se, divergent, replicas))
}

/// [`reinforced_cf`] for a validated configuration.
pub fn theoretical_cf(config: &NrlpConfig, query: &Query, mc_replicas: usize, stream: RngStream) -> Result<CfEstimate> {
    reinforced_cf(&config.triplet, config.p, query, mc_replicas, stream)
}

/// Reinforced cf of a superposition against the product of the parts' cfs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditivityReport {
    pub combined: CfEstimate,
    pub first: CfEstimate,
    pub second: CfEstimate,
    pub product: Complex64,
    pub discrepancy: f64,
    pub pooled_stderr: f64,
}

/// The three estimates use independent substreams of `stream`.
pub fn check_additivity(
    first: &LevyTriplet,
    second: &LevyTriplet,
    p: MemoryParameter,
    query: &Query,
    replicas: usize,
    stream: RngStream,
) -> Result<AdditivityReport> {
    require_admissible(p, first)?;
    require_admissible(p, second)?;
    let sum = first.superpose(second)?;
    let combined = reinforced_cf(&sum, p, query, replicas, stream.derive(1))?;
    let a = reinforced_cf(first, p, query, replicas, stream.derive(2))?;
    let b = reinforced_cf(second, p, query, replicas, stream.derive(3))?;
    let product = a.value * b.value;
    let pooled = libm::sqrt(
        combined.stderr * combined.stderr
            + sq(a.stderr * b.value.norm())
            + sq(b.stderr * a.value.norm()),
    );
    Ok(AdditivityReport {
        combined,
        first: a,
        second: b,
        product,
        discrepancy: (combined.value - product).norm(),
        pooled_stderr: pooled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub c: f64,
    /// `ln|cf(cθ)| / ln|cf(θ)|`.
    pub ratio: f64,
    pub expected: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub alpha: f64,
    pub rows: Vec<StabilityRow>,
}

/// Log-modulus ratios of the reinforced cf of a standard one-dimensional
/// `alpha`-stable process (Brownian motion with unit factor for
/// `alpha = 2`) under `θ ↦ cθ`; each `c != 1` uses an independent substream.
pub fn check_stability(
    alpha: f64,
    p: MemoryParameter,
    query: &Query,
    scales: &[f64],
    replicas: usize,
    stream: RngStream,
) -> Result<StabilityReport> {
    let triplet = if alpha == 2.0 { LevyTriplet::brownian(1) } else { LevyTriplet::stable(1, alpha, 1.0)? };
    require_admissible(p, &triplet)?;
    let base = reinforced_cf(&triplet, p, query, replicas, stream.derive(0))?;
    if base.exponent.re == 0.0 {
        return Err(domain!("the query has a zero exponent; the ratio is undefined"));
    }
    let mut rows = Vec::with_capacity(scales.len());
    for (i, &c) in scales.iter().enumerate() {
        let expected = libm::pow(c.abs(), alpha);
        if c == 1.0 {
            rows.push(StabilityRow { c, ratio: 1.0, expected, stderr: 0.0 });
            continue;
        }
        let scaled = reinforced_cf(&triplet, p, &query.scaled(c), replicas, stream.derive(1 + i as u64))?;
        let ratio = scaled.exponent.re / base.exponent.re;
        let rel = libm::sqrt(
            sq(scaled.exponent_stderr / scaled.exponent.re) + sq(base.exponent_stderr / base.exponent.re),
        );
        rows.push(StabilityRow { c, ratio, expected, stderr: ratio.abs() * rel });
    }
    Ok(StabilityReport { alpha, rows })
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Blumenthal-Getoor index of the configured triplet.
pub fn config_bg_index(config: &NrlpConfig) -> f64 {
    bg_index(&config.triplet)
}
