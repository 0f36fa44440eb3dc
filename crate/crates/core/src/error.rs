use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid policy: {0}")]
    Policy(String),

    #[error("snapshot file {path} malformed at line {line}: {reason}")]
    SnapshotFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("detector error: {0}")]
    Detector(String),

    #[error("external detector exited with status {status}: {stderr}")]
    DetectorExit { status: i32, stderr: String },

    #[error("no partition governs day {day}: day precedes the end of the baseline accumulation")]
    NoGoverningPartition { day: usize },

    #[error("group {0} has no active members on the requested day")]
    EmptyGroup(String),

    #[error("series share {0} common dates; at least 2 required")]
    TooFewCommonDates(usize),

    #[error("infeasible synthesis config: {0}")]
    SynthConfig(String),

    #[error("missing upstream artifact {path}; run `{hint}` first")]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
