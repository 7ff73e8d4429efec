use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two collections that must agree in length or layout did not.
    #[error("shape mismatch: expected {expected}, got {actual} ({context})")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The objective returned a non-finite fitness.
    #[error("fitness evaluation of genome {index} returned {value}")]
    Evaluation { index: usize, value: f64 },

    /// The input file is readable but not in the expected format.
    #[error("input format: {0}")]
    Format(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("series too short: need more than {needed} points, have {actual}")]
    TooShort { needed: usize, actual: usize },

    #[error("malformed input in {path}: {count} of {total} rows unparseable (lines {lines:?})")]
    Malformed {
        path: PathBuf,
        count: usize,
        total: usize,
        lines: Vec<usize>,
    },

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
