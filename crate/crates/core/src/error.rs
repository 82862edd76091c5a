use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    Domain(String),
    /// The memory parameter violates `p·β < 1`.
    Inadmissible { p: f64, beta: f64 },
    /// No exact sampler exists for this jump-measure family.
    UnsupportedFamily(&'static str),
    /// Quadrature or another numerical routine did not converge.
    Numerical(String),
    /// A covariance matrix could not be factorized, even after jitter.
    Factorization(String),
    /// A Yule process path exceeded the per-path jump budget.
    JumpCapExceeded { cap: usize },
    /// An experiment was called outside its intended regime.
    Misuse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Inadmissible { p, beta } => write!(
                f,
                "memory parameter p = {p} is not admissible: the bound p·β < 1 fails \
                 (β = {beta}, p·β = {})",
                p * beta
            ),
            Error::UnsupportedFamily(what) => write!(f, "unsupported jump family: {what}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Factorization(msg) => write!(f, "factorization error: {msg}"),
            Error::JumpCapExceeded { cap } => {
                write!(f, "Yule process exceeded the cap of {cap} jumps on one path")
            }
            Error::Misuse(msg) => write!(f, "misuse: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::Error::Domain(alloc::format!($($arg)*))
    };
}
pub(crate) use domain;
