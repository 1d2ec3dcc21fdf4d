//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    /// A coordinate left the representable range (for instance `y` overflowed under a long flow).
    #[error("value out of representable range: {0}")]
    RangeError(String),
    /// An `SL(2,R)` matrix failed the determinant-one check.
    #[error("matrix determinant {0} is not one")]
    DegenerateMatrix(f64),
    /// An iterative reduction did not terminate.
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    /// An index argument lies outside its admissible set.
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    /// A real argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    DomainError(String),
    /// The requested cutoff is not supported by this operation.
    #[error("unsupported cutoff: {0}")]
    UnsupportedCutoff(String),
    /// The internal error estimate exceeded the requested accuracy.
    #[error("accuracy not met: estimated error {estimate:e} exceeds {requested:e}")]
    AccuracyNotMet { estimate: f64, requested: f64 },
    /// Partial sums grew beyond the divergence threshold.
    #[error("divergence suspected: partial sum magnitude {0:e}")]
    DivergenceSuspected(f64),
    /// The iteration budget was exhausted.
    #[error("maximum number of iterations ({0}) exceeded")]
    MaxIterExceeded(usize),
    /// Double precision is no longer sufficient (continued fraction denominators beyond 2^52).
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    /// Too few exceedances at the largest threshold of a tail fit.
    #[error("only {found} exceedances at R = {r}, at least {required} needed")]
    InsufficientTailSamples { found: usize, required: usize, r: f64 },
    /// A size limit of an exact enumeration was exceeded.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    /// The shift parameters of a Monte Carlo run were declared rational.
    #[error("the pair (c1, alpha) is flagged rational; the limit theorems do not apply")]
    RationalPairWarning,
    /// Writing an output file failed.
    #[error("i/o error: {0}")]
    IoError(String),
}

impl From<std::io::Error> for ThetaError {
    fn from(e: std::io::Error) -> Self {
        ThetaError::IoError(e.to_string())
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, ThetaError>;
