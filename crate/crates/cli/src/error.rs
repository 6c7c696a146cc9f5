use std::process::ExitCode;

use projnorm::Error;

/// Failure classes and their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input file, bad parameter or incompatible shape (exit 2).
    #[error("{0}")]
    Input(String),
    /// Anything that went wrong while computing or writing (exit 1).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::DegenerateCore { .. } | Error::Diverged(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
