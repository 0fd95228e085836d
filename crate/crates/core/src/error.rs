use thiserror::Error;

/// Errors raised by calibration, prediction and metric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("invalid target bounds [{min}, {max}]: min must be finite and below max")]
    InvalidBounds { min: f64, max: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("record has a non-finite field")]
    NonFiniteRecord,
    #[error("sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("score list is empty")]
    EmptyScores,
    #[error("score at index {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("calibration set is empty")]
    EmptyCalibration,
    #[error("calibrated threshold is infinite and no target bounds are configured")]
    UnboundedInterval,
    #[error("inverse_erf is defined on (-1, 1), got {0}")]
    DomainError(f64),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("cannot fit a histogram to an empty label set")]
    EmptyBin,
    #[error("y = {y} lies outside the histogram support [{lo}, {hi}]")]
    OutOfSupport { y: f64, lo: f64, hi: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("invalid group scheme: {0}")]
    InvalidGroupScheme(String),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("calibration fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
