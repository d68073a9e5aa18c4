use mixture_ldp::Error;
use thiserror::Error;

/// Failure classes with a fixed process exit code each.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{0}")]
    DegenerateData(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Verification(_) => 4,
            CliError::DegenerateData(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConditionUnsupported(reason) => CliError::Unsupported(reason),
            Error::UnsupportedCombination(_)
            | Error::UnsupportedLaw(_)
            | Error::DivergentMoment { .. }
            | Error::TooManyComponents { .. } => CliError::Unsupported(e.to_string()),
            Error::InvalidSimplex(_) | Error::InvalidParameter(_) | Error::LengthMismatch(..) | Error::EmptySupport => {
                CliError::Parse(e.to_string())
            }
            Error::DegenerateData(_) => CliError::DegenerateData(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
