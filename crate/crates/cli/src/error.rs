use std::process::ExitCode;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or missing input paths. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Failure while reading, computing or writing. Exit code 2.
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Validation(_) => ExitCode::from(1),
            Self::Runtime(_) => ExitCode::from(2),
        }
    }

    /// One JSON object on a single line.
    pub fn json_line(&self) -> String {
        let kind = match self {
            Self::Validation(_) => "validation",
            Self::Runtime(_) => "runtime",
        };
        let message = match self {
            Self::Validation(m) => m.clone(),
            Self::Runtime(e) => format!("{e:#}"),
        };
        json!({ "error": kind, "message": message }).to_string()
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(anyhow::anyhow!("{msg}"))
}

pub type CliResult<T> = Result<T, CliError>;
