use std::path::PathBuf;

use witten_core::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] witten_core::Error),
}

impl LabError {
    /// 2 for bad input, 3 for numerical failures, 4 for budget overruns.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::Budget => 4,
            },
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
