use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, bad flags.
    #[error("{0}")]
    Input(String),
    /// Input parsed but the mathematics cannot proceed.
    #[error("{0}")]
    Math(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => crate::EXIT_USAGE,
            CliError::Math(_) => crate::EXIT_MATH,
        }
    }
}

impl From<wbary::Error> for CliError {
    fn from(err: wbary::Error) -> Self {
        use wbary::Error::*;
        match err {
            NotPsd { .. }
            | SingularMatrix { .. }
            | EigenNoConvergence { .. }
            | NoPositiveDefinite
            | NotCommuting
            | MaxIterExceeded { .. } => CliError::Math(err.to_string()),
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}
