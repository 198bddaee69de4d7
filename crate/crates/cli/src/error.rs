use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] trapmass::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output verification failed: {0}")]
    Verify(String),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 3 otherwise.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Config(_) => ExitCode::from(2),
            _ => ExitCode::from(3),
        }
    }

    /// Validation errors from the core while building the system are config errors.
    pub fn config(e: trapmass::Error) -> Self {
        Self::Config(e.to_string())
    }
}
