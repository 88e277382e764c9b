use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario {scenario}: {reason}")]
    InvalidScenario { scenario: String, reason: String },

    #[error("scenario {scenario} at {point}: {source}")]
    AtPoint {
        scenario: String,
        point: String,
        #[source]
        source: enaqt::Error,
    },

    #[error(transparent)]
    Model(#[from] enaqt::Error),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("nothing to emit: {0}")]
    Empty(String),
}

impl ExperimentError {
    pub(crate) fn invalid(scenario: &str, reason: impl Into<String>) -> Self {
        Self::InvalidScenario { scenario: scenario.to_string(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}
