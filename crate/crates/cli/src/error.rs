use std::path::PathBuf;

use limeaudit_core::Error as CoreError;

/// Failure of a command, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation or configuration (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data missing or unreadable (exit 3).
    #[error("data error: {0}")]
    Data(String),
    /// Anything else (exit 4).
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn missing_path(what: &str, path: &std::path::Path) -> Self {
        CliError::Config(format!("{what} does not exist: {}", path.display()))
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Internal(format!("{}: {e}", path.display()))
    }

    pub fn data_file(path: PathBuf, message: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {message}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e.root() {
            CoreError::InvalidArgument(_) => CliError::Config(e.to_string()),
            CoreError::Input { .. } => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
