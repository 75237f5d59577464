use std::path::{Path, PathBuf};

use hrv_affect::dsp::DspError;
use hrv_affect::explain::ExplainError;
use hrv_affect::ingest::IngestError;
use hrv_affect::learn::LearnError;
use hrv_affect::variance::VarianceError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input {0}; run the producing stage first")]
    MissingInput(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{dir} holds outputs of configuration {existing}; pass --force to replace them")]
    ConfigConflict { dir: PathBuf, existing: String },
    #[error("{file}: {message}")]
    Format { file: PathBuf, message: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Variance(#[from] VarianceError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    detail: Option<String>,
    message: String,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Format { file: path.to_path_buf(), message: message.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingInput(_) => "MissingInput",
            CliError::ConfigInvalid(_) => "ConfigInvalid",
            CliError::ConfigConflict { .. } => "ConfigConflict",
            CliError::Format { .. } => "InvalidInputFormat",
            CliError::Ingest(_) => "IngestError",
            CliError::Dsp(_) => "SignalError",
            CliError::Variance(_) => "VarianceError",
            CliError::Learn(_) => "LearnError",
            CliError::Explain(_) => "ExplainError",
            CliError::Io { .. } => "IoError",
        }
    }

    /// Stage-independent exit status: 2 for usage and configuration
    /// problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) | CliError::ConfigInvalid(_) | CliError::ConfigConflict { .. } => 2,
            _ => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let detail = match self {
            CliError::MissingInput(s) | CliError::ConfigInvalid(s) => Some(s.clone()),
            CliError::ConfigConflict { existing, .. } => Some(existing.clone()),
            CliError::Format { file, .. } | CliError::Io { path: file, .. } => Some(file.display().to_string()),
            _ => None,
        };
        serde_json::to_string(&ErrorReport { error: self.kind(), detail, message: self.to_string() }).expect("error serializes")
    }
}
