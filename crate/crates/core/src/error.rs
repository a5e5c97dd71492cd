use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} out of range (allowed {allowed})")]
    OutOfRange {
        what: &'static str,
        value: i64,
        allowed: String,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("no steady state: epsilon = {0} but engineered absorption must satisfy epsilon < 1")]
    NoSteadyState(f64),

    #[error("truncation n_max = {n_max} too small for selective index m = {m} (need n_max > m + 2)")]
    TruncationTooSmall { n_max: usize, m: usize },

    #[error("superoperator of dimension {dim} exceeds the dense limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("null space has dimension {dim}; steady state is not unique")]
    DegenerateNullSpace { dim: usize },

    #[error("truncation insufficient: population of |n_max> is {tail:e} > {limit:e}")]
    TruncationInsufficient { tail: f64, limit: f64 },

    #[error("infeasible hierarchy: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn range(what: &'static str, value: usize, allowed: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            value: value as i64,
            allowed: allowed.into(),
        }
    }
}
