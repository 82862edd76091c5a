//! Simulation and verification primitives for step-reinforced random walks
//! and noise-reinforced Lévy processes.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, threads or the command line lives in the `nrlevy` companion
//! crate.
//!
//! Module map:
//!
//! * [`yule_simon`]: the Yule-Simon law and the Yule-Simon counting process.
//! * [`levy`]: Lévy triplets, characteristic exponents, Blumenthal-Getoor
//!   indices and exact increment samplers.
//! * [`step`]: Simon's reinforcement dynamics, occurrence counters and the
//!   elephant random walk.
//! * [`noise`]: noise-reinforced Brownian motion and noise-reinforced Lévy
//!   processes, with their characteristic functions.
//! * [`diagnostics`]: empirical characteristic functions, Kolmogorov-Smirnov
//!   distances and the convergence experiments.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
mod error;
pub mod levy;
pub mod linalg;
pub mod math;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod step;
pub mod yule_simon;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::{RngStream, StreamRng};
