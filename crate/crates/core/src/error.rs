use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sensor id {0} out of range (expected 1..=6)")]
    SensorId(u8),

    #[error("insufficient calibration data: at least one sample is required")]
    NoCalibrationSamples,

    #[error("invalid calibration sample: {0}")]
    CalibrationSample(String),

    #[error("malformed calibration row at line {line}: {message}")]
    CalibrationRow { line: u64, message: String },

    #[error("unknown policy `{0}` (expected `alg1` or `alg2`)")]
    UnknownPolicy(String),

    #[error("invalid pedestrian script: {0}")]
    InvalidScript(String),

    #[error("pedestrian script {index} covers [{start_ms}, {end_ms}] ms but the run needs [0, {duration_ms}] ms")]
    ScriptCoverage {
        index: usize,
        start_ms: u64,
        end_ms: u64,
        duration_ms: u64,
    },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
