use std::path::PathBuf;

use pgm_forecast::ErrorCategory;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] pgm_forecast::Error),
    #[error("io: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            CliError::Config(_) => ErrorCategory::Config,
            CliError::Core(e) => e.category(),
            CliError::Io { .. } => ErrorCategory::Runtime,
            CliError::Json(_) => ErrorCategory::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            ErrorCategory::Config => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::Runtime => 4,
        }
    }
}

/// Lift any module error into the CLI error.
pub fn core<E: Into<pgm_forecast::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}
