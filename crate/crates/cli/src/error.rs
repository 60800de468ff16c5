use std::process::ExitCode;

use thiserror::Error;

/// Failure taxonomy behind the exit codes: usage errors exit 1, data errors
/// exit 2, non-convergence exits 3 after partial results are written.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::NonConvergence(_) => 3,
        })
    }
}
