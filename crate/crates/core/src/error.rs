//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The coupling at the requested level is (numerically) zero, so the
    /// pulse-area trapping condition is singular there.
    #[error(
        "coupling f({n0}; {eta}) = {coupling:e} is degenerate (|f| <= {limit:e}); \
         the state is already a coupling-zero trapping state"
    )]
    DegenerateCoupling {
        n0: usize,
        eta: f64,
        coupling: f64,
        limit: f64,
    },

    /// `L_0^{(1)}` has no positive zeros, so level 0 admits no coupling-zero
    /// trapping condition.
    #[error("n0 = 0 has no coupling zeros")]
    NoZeros,

    /// The pump branching ratio makes the scattering series divergent.
    #[error("pump branching probability p1 = {0} must lie in [0, 1)")]
    NonConvergent(f64),

    /// Two objects that must share a truncation size do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Too much probability has been transported past the Fock cutoff.
    #[error(
        "truncation leak {leak:e} exceeds tolerance {tolerance:e} at cycle {cycle}; \
         increase n_max"
    )]
    LeakExceeded {
        leak: f64,
        tolerance: f64,
        cycle: usize,
    },

    /// A distribution with zero total weight was passed where support is required.
    #[error("distribution has no support")]
    EmptyDistribution,

    /// A sampled recoil kick left the truncated number basis.
    #[error("recoil kick escaped the truncated basis (n_max = {n_max})")]
    TruncationHit { n_max: usize },

    /// Configuration file is missing, malformed, or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
