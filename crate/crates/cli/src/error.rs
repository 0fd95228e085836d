use cdp_core::io::IoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Ingestion(#[from] IoError),
    #[error("configuration files disagree on data: {0}")]
    DataMismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 0 success, 1 validation, 2 ingestion, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::DataMismatch(_) => 1,
            CliError::Ingestion(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<cdp_core::Error> for CliError {
    fn from(e: cdp_core::Error) -> Self {
        use cdp_core::Error as E;
        match e {
            E::UnboundedInterval => {
                CliError::Validation(format!("{e}; pass --bounds or --bdi, or use a larger calibration set"))
            }
            E::EmptyCalibration | E::EmptyInput => CliError::Validation(format!("{e}: input file has no rows")),
            E::InvalidAlpha(_)
            | E::InvalidBounds { .. }
            | E::InvalidPartition(_)
            | E::InvalidSpec(_)
            | E::InvalidFraction(_)
            | E::InvalidParameter(_)
            | E::InvalidGroupScheme(_) => CliError::Validation(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
