use std::path::PathBuf;

use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Each variant maps onto a distinct
/// CLI exit code, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("ValidationError: {0}")]
    Validation(ValidationReport),

    #[error("EmptyArm: no records with a={0}")]
    EmptyArm(u8),

    #[error("IdentificationGap: {0}")]
    IdentificationGap(String),

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("DegenerateDesign: {0}")]
    DegenerateDesign(String),

    #[error("TooManyFailures: {failures} of {b} bootstrap replicates failed (first cause: {first_cause})")]
    TooManyFailures {
        failures: usize,
        b: usize,
        first_cause: String,
    },

    #[error("Unsupported: {0}")]
    Unsupported(String),

    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("MalformedHeader: {0}")]
    MalformedHeader(String),

    #[error("ParseError: row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("IoError: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JsonError: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CsvError: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 10,
            Error::EmptyArm(_) => 11,
            Error::IdentificationGap(_) => 12,
            Error::DimensionMismatch(_) => 13,
            Error::DegenerateDesign(_) => 14,
            Error::TooManyFailures { .. } => 15,
            Error::Unsupported(_) => 16,
            Error::InvalidSpec(_) => 17,
            Error::InvalidArgument(_) => 18,
            Error::MalformedHeader(_) => 19,
            Error::Parse { .. } => 20,
            Error::Io { .. } => 21,
            Error::Json(_) => 22,
            Error::Csv(_) => 23,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
