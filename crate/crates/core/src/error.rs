//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Header does not match the expected schema (missing, unknown or duplicate column).
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell failed to parse. Rows are 1-based data rows, columns named.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Classification cell outside {1, 2}.
    #[error("label error at row {row}: expected 1 or 2, got {value}")]
    Label { row: usize, value: String },

    #[error("empty dataset: no data rows")]
    EmptyDataset,

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    /// Training produced a non-finite value; context names the layer or fold.
    #[error("non-finite {what} in {context}")]
    NonFinite {
        what: &'static str,
        context: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
