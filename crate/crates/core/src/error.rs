use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty set of p-values")]
    Empty,

    #[error("p-value {value} at position {index} is outside [0, 1]")]
    PValueOutOfRange { index: usize, value: f64 },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("level {0} is outside the open interval (0, 1)")]
    InvalidLevel(f64),

    #[error("argument {0} is not finite")]
    NonFinite(f64),

    #[error("degrees of freedom must be positive and finite, got {0}")]
    InvalidDof(f64),

    #[error("permutation count must be at least 1")]
    InvalidPermutationCount,

    #[error("length mismatch: {left} statistics but {right} p-values")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Checks that `q` lies strictly between 0 and 1.
pub(crate) fn check_level(q: f64) -> Result<f64> {
    if q > 0.0 && q < 1.0 {
        Ok(q)
    } else {
        Err(Error::InvalidLevel(q))
    }
}
