//! Reproducible random streams and the handful of variate generators the
//! samplers share.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson, StandardNormal};

/// The generator handed out by [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// A `(seed, stream_id)` pair naming one reproducible random stream.
///
/// Identical pairs give identical draws. Distinct `stream_id`s under the same
/// seed select disjoint ChaCha streams, so replica `r` of an experiment can use
/// `stream_id = r` and be run on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child stream family, independent of `self` for all practical purposes.
    /// Child `stream_id` starts at 0.
    pub fn derive(&self, tag: u64) -> RngStream {
        let mut h = splitmix64(self.seed ^ 0x6a09_e667_f3bc_c908);
        h = splitmix64(h ^ self.stream_id);
        h = splitmix64(h ^ tag);
        RngStream::new(h, 0)
    }

    /// Stream `r` of this family.
    pub fn replica(&self, r: u64) -> RngStream {
        RngStream::new(self.seed, r)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -libm::log(open01(rng))
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Counts are kept in `u64`; geometric draws from vanishing success
/// probabilities saturate here instead of overflowing.
pub const COUNT_CEILING: f64 = 9.0e15;

#[inline]
pub(crate) fn f64_to_count(x: f64) -> u64 {
    if x >= COUNT_CEILING {
        COUNT_CEILING as u64
    } else {
        x as u64
    }
}

/// Geometric variable on `{1, 2, ...}` with success probability `q`.
pub fn geometric1<R: Rng + ?Sized>(q: f64, rng: &mut R) -> u64 {
    if q >= 1.0 {
        return 1;
    }
    let failures = libm::floor(libm::log(open01(rng)) / libm::log1p(-q));
    1 + f64_to_count(failures)
}

pub fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    if lambda > 1.0e12 {
        let x = lambda + libm::sqrt(lambda) * std_normal(rng);
        return f64_to_count(libm::round(x.max(0.0)));
    }
    let d = Poisson::new(lambda).expect("positive finite Poisson mean");
    f64_to_count(d.sample(rng))
}

/// Number of failures before the `k`-th success, success probability `q`.
pub fn negative_binomial<R: Rng + ?Sized>(k: u64, q: f64, rng: &mut R) -> u64 {
    if k == 0 || q >= 1.0 {
        return 0;
    }
    let scale = (1.0 - q) / q;
    let lambda = Gamma::new(k as f64, scale)
        .expect("positive gamma parameters")
        .sample(rng);
    poisson(lambda, rng)
}

pub fn binomial<R: Rng + ?Sized>(n: u64, prob: f64, rng: &mut R) -> u64 {
    if n == 0 || prob <= 0.0 {
        return 0;
    }
    if prob >= 1.0 {
        return n;
    }
    if n <= 16 {
        return (0..n).filter(|_| open01(rng) < prob).count() as u64;
    }
    Binomial::new(n, prob).expect("valid binomial").sample(rng)
}

pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b).expect("positive beta parameters").sample(rng)
}
