//! Lévy triplets `(M, a, Λ)`, their characteristic exponents and exact
//! increment samplers.
//!
//! The Gaussian part of a triplet is given by a factor `M`, and the process
//! is `M B(t)` for a standard Brownian motion `B`. Its quadratic form is
//! therefore `q(θ) = |Mᵀθ|²`.

use crate::error::domain;
use crate::linalg::{mat_t_vec, mat_vec, norm, psd_factor};
use crate::math::{sphere_one_minus_cos_average, stable_radial_constant};
use crate::quad::integrate;
use crate::rng::{self, std_normal};
use crate::yule_simon::MemoryParameter;
use crate::{Complex64, Error, Result};
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::PI;
use core::fmt;
use rand::Rng;

/// Tolerance used to classify `p * beta` as exactly critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// One atom `mass * δ_location` of a finite Lévy measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Parametric Lévy measures.
#[derive(Clone)]
pub enum JumpMeasure {
    Zero,
    /// Isotropic `alpha`-stable measure normalized so that its exponent is
    /// `scale * |θ|^alpha`.
    IsotropicStable { alpha: f64, scale: f64 },
    /// Compound-Poisson jumps.
    FiniteAtomic { atoms: Vec<Atom> },
    /// Isotropic measure with `Λ(|x| ∈ dr) = density(r) dr`.
    RadialDensity { density: RadialFn, bg_hint: f64 },
    /// Superposition of independent parts.
    Sum(Vec<JumpMeasure>),
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpMeasure::Zero => f.write_str("Zero"),
            JumpMeasure::IsotropicStable { alpha, scale } => f
                .debug_struct("IsotropicStable")
                .field("alpha", alpha)
                .field("scale", scale)
                .finish(),
            JumpMeasure::FiniteAtomic { atoms } => {
                f.debug_struct("FiniteAtomic").field("atoms", atoms).finish()
            }
            JumpMeasure::RadialDensity { bg_hint, .. } => f
                .debug_struct("RadialDensity")
                .field("bg_hint", bg_hint)
                .finish_non_exhaustive(),
            JumpMeasure::Sum(parts) => f.debug_tuple("Sum").field(parts).finish(),
        }
    }
}

impl PartialEq for JumpMeasure {
    fn eq(&self, other: &Self) -> bool {
        use JumpMeasure::*;
        match (self, other) {
            (Zero, Zero) => true,
            (IsotropicStable { alpha: a, scale: s }, IsotropicStable { alpha: b, scale: t }) => {
                a == b && s == t
            }
            (FiniteAtomic { atoms: a }, FiniteAtomic { atoms: b }) => a == b,
            (
                RadialDensity { density: f, bg_hint: a },
                RadialDensity { density: g, bg_hint: b },
            ) => Arc::ptr_eq(f, g) && a == b,
            (Sum(a), Sum(b)) => a == b,
            _ => false,
        }
    }
}

impl JumpMeasure {
    pub fn isotropic_stable(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(domain!("stable index must lie in (0, 2), got {alpha}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain!("stable scale must be positive and finite, got {scale}"));
        }
        Ok(JumpMeasure::IsotropicStable { alpha, scale })
    }

    pub fn finite_atomic(atoms: Vec<Atom>) -> Result<Self> {
        for atom in &atoms {
            if !(atom.mass > 0.0 && atom.mass.is_finite()) {
                return Err(domain!("atom masses must be positive and finite, got {}", atom.mass));
            }
            if atom.location.iter().any(|x| !x.is_finite()) {
                return Err(domain!("atom locations must be finite"));
            }
            if norm(&atom.location) == 0.0 {
                return Err(domain!("a Lévy measure cannot charge the origin"));
            }
        }
        Ok(JumpMeasure::FiniteAtomic { atoms })
    }

    /// Checks `∫ (1 ∧ r²) density(r) dr < ∞` numerically.
    pub fn radial_density(density: RadialFn, bg_hint: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&bg_hint) {
            return Err(domain!("Blumenthal-Getoor hint must lie in [0, 2], got {bg_hint}"));
        }
        let near = integrate(|r| r * r * density(r), 0.0, 1.0, 1e-10, 1e-8, 2000);
        let far = integrate(
            |u| if u > 0.0 { density(1.0 / u) / (u * u) } else { 0.0 },
            0.0,
            1.0,
            1e-10,
            1e-8,
            2000,
        );
        let total = near.value + far.value;
        if !near.converged || !far.converged || !total.is_finite() || total < 0.0 {
            return Err(Error::Numerical(format!(
                "radial density fails the integrability check: ∫(1∧r²)ν = {} ± {}",
                total,
                near.abs_error + far.abs_error
            )));
        }
        Ok(JumpMeasure::RadialDensity { density, bg_hint })
    }

    fn dim_check(&self, dim: usize) -> Result<()> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => {
                if atoms.iter().any(|a| a.location.len() != dim) {
                    return Err(domain!("atom dimension does not match the triplet dimension {dim}"));
                }
                Ok(())
            }
            JumpMeasure::Sum(parts) => parts.iter().try_for_each(|p| p.dim_check(dim)),
            _ => Ok(()),
        }
    }

    /// The measure multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> JumpMeasure {
        match self {
            JumpMeasure::Zero => JumpMeasure::Zero,
            JumpMeasure::IsotropicStable { alpha, scale } => {
                JumpMeasure::IsotropicStable { alpha: *alpha, scale: scale * factor }
            }
            JumpMeasure::FiniteAtomic { atoms } => JumpMeasure::FiniteAtomic {
                atoms: atoms
                    .iter()
                    .map(|a| Atom { location: a.location.clone(), mass: a.mass * factor })
                    .collect(),
            },
            JumpMeasure::RadialDensity { density, bg_hint } => {
                let density = density.clone();
                JumpMeasure::RadialDensity {
                    density: Arc::new(move |r| factor * density(r)),
                    bg_hint: *bg_hint,
                }
            }
            JumpMeasure::Sum(parts) => JumpMeasure::Sum(parts.iter().map(|p| p.scaled(factor)).collect()),
        }
    }

    /// Blumenthal-Getoor index of the measure alone.
    pub fn bg_index(&self) -> f64 {
        match self {
            JumpMeasure::Zero | JumpMeasure::FiniteAtomic { .. } => 0.0,
            JumpMeasure::IsotropicStable { alpha, .. } => *alpha,
            JumpMeasure::RadialDensity { bg_hint, .. } => *bg_hint,
            JumpMeasure::Sum(parts) => parts.iter().map(|p| p.bg_index()).fold(0.0, f64::max),
        }
    }

    /// Jump part of the exponent, `∫ (1 - e^{iθ·x} + iθ·x 1{|x|<1}) Λ(dx)`.
    pub fn exponent(&self, theta: &[f64]) -> Result<Complex64> {
        let dim = theta.len();
        match self {
            JumpMeasure::Zero => Ok(Complex64::new(0.0, 0.0)),
            JumpMeasure::IsotropicStable { alpha, scale } => {
                Ok(Complex64::new(scale * libm::pow(norm(theta), *alpha), 0.0))
            }
            JumpMeasure::FiniteAtomic { atoms } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for atom in atoms {
                    let phase: f64 = theta.iter().zip(&atom.location).map(|(t, x)| t * x).sum();
                    let s = libm::sin(phase);
                    // 1 - cos written as 2 sin²(φ/2) to keep small phases accurate
                    let h = libm::sin(0.5 * phase);
                    let mut term = Complex64::new(2.0 * h * h, -s);
                    if norm(&atom.location) < 1.0 {
                        term.im += phase;
                    }
                    acc += term * atom.mass;
                }
                Ok(acc)
            }
            JumpMeasure::RadialDensity { density, .. } => {
                Ok(Complex64::new(radial_exponent(density, norm(theta), dim)?, 0.0))
            }
            JumpMeasure::Sum(parts) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for part in parts {
                    acc += part.exponent(theta)?;
                }
                Ok(acc)
            }
        }
    }

    /// `∫_{|x|<1} x Λ(dx)`; zero for every symmetric family.
    pub fn small_jump_mean(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.add_small_jump_mean(&mut out);
        out
    }

    fn add_small_jump_mean(&self, out: &mut [f64]) {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => {
                for atom in atoms.iter().filter(|a| norm(&a.location) < 1.0) {
                    for (o, x) in out.iter_mut().zip(&atom.location) {
                        *o += atom.mass * x;
                    }
                }
            }
            JumpMeasure::Sum(parts) => parts.iter().for_each(|p| p.add_small_jump_mean(out)),
            _ => {}
        }
    }
}

/// `∫ density(r) E[1 - cos(k r σ₁)] dr` for `σ` uniform on the sphere.
///
/// The oscillatory part is integrated up to a cutoff `R` past which
/// `|∫_R^∞ density(r) E[cos(k r σ₁)] dr| <= 4 density(R) / k` is negligible
/// (this assumes an eventually nonincreasing density); beyond `R` only the
/// non-oscillatory mass `∫_R^∞ density` remains.
fn radial_exponent(density: &RadialFn, k: f64, dim: usize) -> Result<f64> {
    if k == 0.0 {
        return Ok(0.0);
    }
    const CUTOFF_TOL: f64 = 1e-12;
    let g = |r: f64| density(r) * sphere_one_minus_cos_average(k * r, dim);
    let mut cutoff = 64.0f64.max(16.0 * PI / k);
    while 4.0 * density(cutoff) / k > CUTOFF_TOL && cutoff < 1e9 {
        cutoff *= 2.0;
    }
    let near = integrate(g, 0.0, 1.0, 1e-12, 1e-10, 4000);
    let mid = integrate(g, 1.0, cutoff, 1e-12, 1e-10, 200_000);
    let far = integrate(
        |u| if u > 0.0 { density(1.0 / u) / (u * u) } else { 0.0 },
        0.0,
        1.0 / cutoff,
        1e-13,
        1e-10,
        4000,
    );
    let tail_bound = 4.0 * density(cutoff) / k;
    let value = near.value + mid.value + far.value;
    if !(near.converged && mid.converged && far.converged) || tail_bound > 1e-8 * (1.0 + value.abs()) {
        return Err(Error::Numerical(format!(
            "radial quadrature did not converge at |θ| = {k}: error estimates {:.3e}, {:.3e}, {:.3e}, \
             oscillatory tail bound {tail_bound:.3e}",
            near.abs_error, mid.abs_error, far.abs_error
        )));
    }
    Ok(value)
}

/// Characteristics `(M, a, Λ)` of a Lévy process in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    dim: usize,
    gaussian_factor: Vec<f64>,
    drift: Vec<f64>,
    jumps: JumpMeasure,
}

impl LevyTriplet {
    /// `gaussian_factor` is `dim × dim`, row-major.
    pub fn new(dim: usize, gaussian_factor: Vec<f64>, drift: Vec<f64>, jumps: JumpMeasure) -> Result<Self> {
        if dim == 0 {
            return Err(domain!("dimension must be positive"));
        }
        if gaussian_factor.len() != dim * dim {
            return Err(domain!(
                "Gaussian factor needs {} entries, got {}",
                dim * dim,
                gaussian_factor.len()
            ));
        }
        if drift.len() != dim {
            return Err(domain!("drift needs {dim} entries, got {}", drift.len()));
        }
        if gaussian_factor.iter().chain(&drift).any(|x| !x.is_finite()) {
            return Err(domain!("triplet entries must be finite"));
        }
        jumps.dim_check(dim)?;
        Ok(Self { dim, gaussian_factor, drift, jumps })
    }

    /// Standard Brownian motion in `R^dim`.
    pub fn brownian(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        Self { dim, gaussian_factor: m, drift: vec![0.0; dim], jumps: JumpMeasure::Zero }
    }

    pub fn drift_only(drift: Vec<f64>) -> Self {
        let dim = drift.len();
        Self { dim, gaussian_factor: vec![0.0; dim * dim], drift, jumps: JumpMeasure::Zero }
    }

    pub fn zero(dim: usize) -> Self {
        Self::drift_only(vec![0.0; dim])
    }

    /// Standard one-dimensional Cauchy process, `Ψ(θ) = |θ|`.
    pub fn cauchy() -> Self {
        Self::stable(1, 1.0, 1.0).expect("valid Cauchy parameters")
    }

    /// Isotropic stable process with exponent `scale * |θ|^alpha`.
    pub fn stable(dim: usize, alpha: f64, scale: f64) -> Result<Self> {
        let jumps = JumpMeasure::isotropic_stable(alpha, scale)?;
        Self::new(dim, vec![0.0; dim * dim], vec![0.0; dim], jumps)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn gaussian_factor(&self) -> &[f64] {
        &self.gaussian_factor
    }

    #[inline]
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    #[inline]
    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    pub fn has_gaussian_part(&self) -> bool {
        self.gaussian_factor.iter().any(|&x| x != 0.0)
    }

    /// Characteristics of the sum of two independent processes. The
    /// Gaussian factor is a square root of `M₁M₁ᵀ + M₂M₂ᵀ`.
    pub fn superpose(&self, other: &LevyTriplet) -> Result<LevyTriplet> {
        if self.dim != other.dim {
            return Err(domain!("cannot superpose dimensions {} and {}", self.dim, other.dim));
        }
        let d = self.dim;
        let gaussian_factor = match (self.has_gaussian_part(), other.has_gaussian_part()) {
            (false, false) => vec![0.0; d * d],
            (true, false) => self.gaussian_factor.clone(),
            (false, true) => other.gaussian_factor.clone(),
            (true, true) => {
                let mut cov = vec![0.0; d * d];
                for m in [&self.gaussian_factor, &other.gaussian_factor] {
                    for i in 0..d {
                        for j in 0..d {
                            cov[i * d + j] += (0..d).map(|k| m[i * d + k] * m[j * d + k]).sum::<f64>();
                        }
                    }
                }
                psd_factor(&cov, d)?
            }
        };
        let drift = self.drift.iter().zip(&other.drift).map(|(a, b)| a + b).collect();
        let jumps = match (&self.jumps, &other.jumps) {
            (JumpMeasure::Zero, j) | (j, JumpMeasure::Zero) => j.clone(),
            (a, b) => {
                let mut parts = Vec::new();
                for j in [a, b] {
                    match j {
                        JumpMeasure::Sum(inner) => parts.extend(inner.iter().cloned()),
                        other => parts.push(other.clone()),
                    }
                }
                JumpMeasure::Sum(parts)
            }
        };
        Ok(LevyTriplet { dim: d, gaussian_factor, drift, jumps })
    }

    /// `½|Mᵀθ|²`.
    pub fn gaussian_exponent(&self, theta: &[f64]) -> f64 {
        if !self.has_gaussian_part() {
            return 0.0;
        }
        let mut v = vec![0.0; self.dim];
        mat_t_vec(&self.gaussian_factor, self.dim, self.dim, theta, &mut v);
        0.5 * v.iter().map(|x| x * x).sum::<f64>()
    }
}

/// `Ψ(θ) = ½|Mᵀθ|² - i a·θ + ∫(1 - e^{iθ·x} + iθ·x 1{|x|<1}) Λ(dx)`.
pub fn characteristic_exponent(triplet: &LevyTriplet, theta: &[f64]) -> Result<Complex64> {
    if theta.len() != triplet.dim {
        return Err(domain!("θ has dimension {}, expected {}", theta.len(), triplet.dim));
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(domain!("θ must be finite"));
    }
    let drift: f64 = triplet.drift.iter().zip(theta).map(|(a, t)| a * t).sum();
    let jumps = triplet.jumps.exponent(theta)?;
    Ok(Complex64::new(triplet.gaussian_exponent(theta), -drift) + jumps)
}

/// Upper Blumenthal-Getoor index, 2 whenever a Gaussian part is present.
pub fn bg_index(triplet: &LevyTriplet) -> f64 {
    if triplet.has_gaussian_part() {
        2.0
    } else {
        triplet.jumps.bg_index()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    /// `p * beta = 1`, outside both regimes.
    Critical,
    Inadmissible,
}

pub fn admissibility(p: MemoryParameter, triplet: &LevyTriplet) -> Admissibility {
    let pb = p.p() * bg_index(triplet);
    if (pb - 1.0).abs() <= CRITICAL_TOLERANCE {
        Admissibility::Critical
    } else if pb < 1.0 {
        Admissibility::Admissible
    } else {
        Admissibility::Inadmissible
    }
}

/// `p * beta < 1`. The critical case returns false and logs a warning.
pub fn is_admissible(p: MemoryParameter, triplet: &LevyTriplet) -> bool {
    match admissibility(p, triplet) {
        Admissibility::Admissible => true,
        Admissibility::Critical => {
            log::warn!(
                "p = {} is critical for this triplet (p * beta = 1); treated as inadmissible",
                p.p()
            );
            false
        }
        Admissibility::Inadmissible => false,
    }
}

pub(crate) fn require_admissible(p: MemoryParameter, triplet: &LevyTriplet) -> Result<()> {
    if is_admissible(p, triplet) {
        Ok(())
    } else {
        Err(Error::Inadmissible { p: p.p(), beta: bg_index(triplet) })
    }
}

/// The thinned measure `(1 - p) Λ`.
pub fn thin(triplet: &LevyTriplet, p: MemoryParameter) -> JumpMeasure {
    triplet.jumps.scaled(1.0 - p.p())
}

/// Symmetric standard `alpha`-stable variable, `E e^{iθX} = e^{-|θ|^alpha}`
/// (Chambers-Mallows-Stuck).
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng::open01(rng) - 0.5);
    let w = rng::exp1(rng);
    if alpha == 1.0 {
        return libm::tan(v);
    }
    let a = libm::sin(alpha * v) / libm::pow(libm::cos(v), 1.0 / alpha);
    a * libm::pow(libm::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha)
}

/// Positive stable variable with `E e^{-λS} = e^{-λ^a}`, `0 < a < 1` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = PI * rng::open01(rng);
    let w = rng::exp1(rng);
    let num = libm::sin(a * u) / libm::pow(libm::sin(u), 1.0 / a);
    num * libm::pow(libm::sin((1.0 - a) * u) / w, (1.0 - a) / a)
}

/// Isotropic standard stable vector in `R^dim`, `E e^{iθ·X} = e^{-|θ|^alpha}`.
pub fn isotropic_stable_vector<R: Rng + ?Sized>(alpha: f64, rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = symmetric_stable(alpha, rng);
        return;
    }
    // √A G with G ~ N(0, 2I) and A positive (alpha/2)-stable
    let a = positive_stable(0.5 * alpha, rng);
    let s = libm::sqrt(2.0 * a);
    for o in out.iter_mut() {
        *o = s * std_normal(rng);
    }
}

#[derive(Debug, Clone)]
enum JumpPart {
    Stable { alpha: f64, factor: f64 },
    Atomic { locations: Vec<f64>, cumulative: Vec<f64>, rate: f64, compensation: Vec<f64> },
}

/// Exact sampler of `ξ(dt)` for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    dim: usize,
    gaussian: Option<Vec<f64>>,
    drift: Vec<f64>,
    parts: Vec<JumpPart>,
}

impl IncrementSampler {
    pub fn new(triplet: &LevyTriplet, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain!("time step must be positive, got {dt}"));
        }
        let dim = triplet.dim;
        let gaussian = triplet.has_gaussian_part().then(|| {
            let s = libm::sqrt(dt);
            triplet.gaussian_factor.iter().map(|m| m * s).collect()
        });
        let drift = triplet.drift.iter().map(|a| a * dt).collect();
        let mut parts = Vec::new();
        collect_parts(&triplet.jumps, dim, dt, &mut parts)?;
        Ok(Self { dim, gaussian, drift, parts })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes one increment into `out` (length `dim`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        out.copy_from_slice(&self.drift);
        let mut buf = [0.0f64; 8];
        let mut heap;
        let scratch: &mut [f64] = if self.dim <= 8 {
            &mut buf[..self.dim]
        } else {
            heap = vec![0.0; self.dim];
            &mut heap
        };
        if let Some(m) = &self.gaussian {
            let mut g = [0.0f64; 8];
            let mut gh;
            let g: &mut [f64] = if self.dim <= 8 {
                &mut g[..self.dim]
            } else {
                gh = vec![0.0; self.dim];
                &mut gh
            };
            for x in g.iter_mut() {
                *x = std_normal(rng);
            }
            mat_vec(m, self.dim, self.dim, g, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += s;
            }
        }
        for part in &self.parts {
            match part {
                JumpPart::Stable { alpha, factor } => {
                    isotropic_stable_vector(*alpha, rng, scratch);
                    for (o, s) in out.iter_mut().zip(scratch.iter()) {
                        *o += factor * s;
                    }
                }
                JumpPart::Atomic { locations, cumulative, rate, compensation } => {
                    let count = rng::poisson(*rate, rng);
                    let total = *cumulative.last().unwrap_or(&0.0);
                    for _ in 0..count {
                        let u = rng::open01(rng) * total;
                        let i = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                        for (o, x) in out.iter_mut().zip(&locations[i * self.dim..(i + 1) * self.dim]) {
                            *o += x;
                        }
                    }
                    for (o, c) in out.iter_mut().zip(compensation) {
                        *o -= c;
                    }
                }
            }
        }
    }
}

fn collect_parts(jumps: &JumpMeasure, dim: usize, dt: f64, parts: &mut Vec<JumpPart>) -> Result<()> {
    match jumps {
        JumpMeasure::Zero => {}
        JumpMeasure::IsotropicStable { alpha, scale } => {
            parts.push(JumpPart::Stable { alpha: *alpha, factor: libm::pow(scale * dt, 1.0 / alpha) });
        }
        JumpMeasure::FiniteAtomic { atoms } => {
            if !atoms.is_empty() {
                let mut locations = Vec::with_capacity(atoms.len() * dim);
                let mut cumulative = Vec::with_capacity(atoms.len());
                let mut acc = 0.0;
                for atom in atoms {
                    locations.extend_from_slice(&atom.location);
                    acc += atom.mass;
                    cumulative.push(acc);
                }
                let compensation = jumps.small_jump_mean(dim).into_iter().map(|c| c * dt).collect();
                parts.push(JumpPart::Atomic { locations, cumulative, rate: acc * dt, compensation });
            }
        }
        JumpMeasure::RadialDensity { .. } => {
            return Err(Error::UnsupportedFamily("radial density measures have no exact increment sampler"))
        }
        JumpMeasure::Sum(inner) => {
            for part in inner {
                collect_parts(part, dim, dt, parts)?;
            }
        }
    }
    Ok(())
}

/// One draw of `ξ(dt)`.
pub fn increment_sample<R: Rng + ?Sized>(triplet: &LevyTriplet, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(triplet, dt)?;
    let mut out = vec![0.0; triplet.dim];
    sampler.sample(rng, &mut out);
    Ok(out)
}

/// Radial constant of `scale` times the standard isotropic stable measure.
pub(crate) fn stable_radial_mass(alpha: f64, scale: f64, dim: usize) -> f64 {
    scale * stable_radial_constant(alpha, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn closed_form_exponents() {
        let c = LevyTriplet::cauchy();
        assert_eq!(characteristic_exponent(&c, &[-2.5]).unwrap(), Complex64::new(2.5, 0.0));
        let b = LevyTriplet::brownian(1);
        assert_eq!(characteristic_exponent(&b, &[3.0]).unwrap(), Complex64::new(4.5, 0.0));
        let d = LevyTriplet::drift_only(vec![1.0, -2.0]);
        assert_eq!(characteristic_exponent(&d, &[0.5, 1.0]).unwrap(), Complex64::new(0.0, 1.5));
        assert_eq!(characteristic_exponent(&b, &[0.0]).unwrap(), Complex64::new(0.0, 0.0));
        assert!(characteristic_exponent(&b, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn gaussian_form_uses_factor_transpose() {
        // M = [[1, 2], [0, 1]], θ = (1, 0): Mᵀθ = (1, 2)
        let t = LevyTriplet::new(2, vec![1.0, 2.0, 0.0, 1.0], vec![0.0; 2], JumpMeasure::Zero).unwrap();
        assert_eq!(characteristic_exponent(&t, &[1.0, 0.0]).unwrap().re, 2.5);
    }

    #[test]
    fn atomic_exponent_matches_direct_sum() {
        let atoms = vec![
            Atom { location: vec![0.3], mass: 2.0 },
            Atom { location: vec![-1.7], mass: 0.5 },
        ];
        let t = LevyTriplet::new(1, vec![0.0], vec![0.0], JumpMeasure::finite_atomic(atoms).unwrap()).unwrap();
        for th in [-3.0, -0.2, 0.7, 5.0] {
            let got = characteristic_exponent(&t, &[th]).unwrap();
            let direct = Complex64::new(2.0, 0.0)
                * (Complex64::new(1.0, 0.0) - Complex64::new(0.0, th * 0.3).exp() + Complex64::new(0.0, th * 0.3))
                + Complex64::new(0.5, 0.0) * (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -th * 1.7).exp());
            assert!((got - direct).norm() <= 1e-12 * direct.norm().max(1e-300));
        }
    }

    #[test]
    fn radial_quadrature_reproduces_stable_exponent() {
        for dim in [1usize, 2, 3] {
            let alpha = 1.3;
            let k = stable_radial_constant(alpha, dim);
            let dens: RadialFn = Arc::new(move |r: f64| k * libm::pow(r, -1.0 - alpha));
            let jm = JumpMeasure::radial_density(dens, alpha).unwrap();
            let t = LevyTriplet::new(dim, vec![0.0; dim * dim], vec![0.0; dim], jm).unwrap();
            let mut theta = vec![0.0; dim];
            theta[0] = 1.7;
            let psi = characteristic_exponent(&t, &theta).unwrap();
            assert!(approx(psi.re, libm::pow(1.7, alpha), 1e-6), "dim {dim}: {}", psi.re);
            assert_eq!(bg_index(&t), alpha);
        }
    }

    #[test]
    fn radial_density_integrability_is_checked() {
        let dens: RadialFn = Arc::new(|r: f64| libm::pow(r, -3.5));
        assert!(JumpMeasure::radial_density(dens, 2.0).is_err());
    }

    #[test]
    fn bg_and_admissibility() {
        let p = |x| MemoryParameter::new(x).unwrap();
        let s = LevyTriplet::stable(1, 1.5, 1.0).unwrap();
        assert_eq!(bg_index(&s), 1.5);
        assert_eq!(bg_index(&LevyTriplet::brownian(2)), 2.0);
        let atomic = JumpMeasure::finite_atomic(vec![Atom { location: vec![1.0], mass: 1.0 }]).unwrap();
        let a = LevyTriplet::new(1, vec![0.0], vec![0.0], atomic).unwrap();
        assert_eq!(bg_index(&a), 0.0);
        assert!(is_admissible(p(0.3), &LevyTriplet::brownian(1)));
        assert!(!is_admissible(p(0.6), &LevyTriplet::brownian(1)));
        assert!(is_admissible(p(0.5), &s));
        for q in [0.01, 0.5, 0.99] {
            assert!(is_admissible(p(q), &LevyTriplet::cauchy()));
        }
        assert_eq!(admissibility(p(0.5), &LevyTriplet::brownian(1)), Admissibility::Critical);
        assert!(!is_admissible(p(0.5), &LevyTriplet::brownian(1)));
    }

    #[test]
    fn thinning() {
        let atomic = JumpMeasure::finite_atomic(vec![Atom { location: vec![1.0], mass: 2.0 }]).unwrap();
        let t = LevyTriplet::new(1, vec![0.0], vec![0.0], atomic).unwrap();
        let thinned = thin(&t, MemoryParameter::new(0.5).unwrap());
        assert_eq!(
            thinned,
            JumpMeasure::FiniteAtomic { atoms: vec![Atom { location: vec![1.0], mass: 1.0 }] }
        );
        let s = LevyTriplet::stable(1, 1.2, 3.0).unwrap();
        let ts = thin(&s, MemoryParameter::new(0.25).unwrap());
        assert_eq!(ts, JumpMeasure::IsotropicStable { alpha: 1.2, scale: 2.25 });
        let tiny = thin(&s, MemoryParameter::new(1e-15).unwrap());
        assert!(matches!(tiny, JumpMeasure::IsotropicStable { scale, .. } if (scale - 3.0).abs() < 1e-14));
    }

    #[test]
    fn superposition_adds_exponents() {
        let b = LevyTriplet::new(2, vec![1.0, 0.5, 0.0, 2.0], vec![0.1, 0.2], JumpMeasure::Zero).unwrap();
        let atomic = JumpMeasure::finite_atomic(vec![Atom { location: vec![0.4, -0.2], mass: 1.5 }]).unwrap();
        let c = LevyTriplet::new(
            2,
            vec![0.3, 0.0, 0.0, 0.3],
            vec![-1.0, 0.0],
            JumpMeasure::Sum(vec![atomic, JumpMeasure::isotropic_stable(0.8, 0.7).unwrap()]),
        )
        .unwrap();
        let s = b.superpose(&c).unwrap();
        for theta in [[0.3, -1.1], [2.0, 0.5]] {
            let lhs = characteristic_exponent(&s, &theta).unwrap();
            let rhs = characteristic_exponent(&b, &theta).unwrap() + characteristic_exponent(&c, &theta).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
        assert_eq!(bg_index(&s), 2.0);
    }

    #[test]
    fn drift_increment_is_deterministic() {
        let t = LevyTriplet::drift_only(vec![2.0, -4.0]);
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(increment_sample(&t, 0.25, &mut rng).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn radial_family_cannot_be_sampled() {
        let dens: RadialFn = Arc::new(|r: f64| if r < 1.0 { 1.0 } else { 0.0 });
        let jm = JumpMeasure::radial_density(dens, 0.0).unwrap();
        let t = LevyTriplet::new(1, vec![0.0], vec![0.0], jm).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        assert!(matches!(increment_sample(&t, 0.1, &mut rng), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = RngStream::new(11, 0).rng();
        for a in [0.3, 0.75] {
            let n = 200_000;
            let m: f64 = (0..n).map(|_| libm::exp(-positive_stable(a, &mut rng))).sum::<f64>() / n as f64;
            assert!((m - libm::exp(-1.0)).abs() < 0.004, "a = {a}: {m}");
        }
    }

    #[test]
    fn increment_ecf_matches_exponent() {
        let atoms = vec![
            Atom { location: vec![0.5, 0.0], mass: 3.0 },
            Atom { location: vec![-1.5, 1.0], mass: 1.0 },
        ];
        let families = [
            LevyTriplet::brownian(1),
            LevyTriplet::cauchy(),
            LevyTriplet::stable(1, 1.5, 0.7).unwrap(),
            LevyTriplet::stable(2, 1.2, 1.0).unwrap(),
            LevyTriplet::new(
                2,
                vec![1.0, 0.0, 0.3, 0.5],
                vec![0.2, -0.1],
                JumpMeasure::finite_atomic(atoms).unwrap(),
            )
            .unwrap(),
        ];
        let n = 100_000;
        let dt = 0.3;
        for (f, t) in families.iter().enumerate() {
            let sampler = IncrementSampler::new(t, dt).unwrap();
            let mut rng = RngStream::new(12, f as u64).rng();
            let d = t.dim();
            let draws: Vec<f64> = (0..n)
                .flat_map(|_| {
                    let mut x = vec![0.0; d];
                    sampler.sample(&mut rng, &mut x);
                    x
                })
                .collect();
            for k in 0..20 {
                let mut theta = vec![0.0; d];
                theta[0] = 0.2 * (k as f64 + 1.0) * if k % 2 == 0 { 1.0 } else { -1.0 };
                if d == 2 {
                    theta[1] = 0.1 * k as f64;
                }
                let mut ecf = Complex64::new(0.0, 0.0);
                for x in draws.chunks(d) {
                    let ph: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
                    ecf += Complex64::new(0.0, ph).exp();
                }
                ecf /= n as f64;
                let exact = (-characteristic_exponent(t, &theta).unwrap() * dt).exp();
                assert!((ecf - exact).norm() < 4.0 / libm::sqrt(n as f64), "family {f}, θ {theta:?}");
            }
        }
    }
}
