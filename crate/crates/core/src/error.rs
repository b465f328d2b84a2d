use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty table")]
    EmptyTable,

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("empty cell at row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },

    #[error("unparseable numeric value {value:?} at row {row}, column {column:?}")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("unknown category {value:?} for attribute {attribute:?}")]
    UnknownCategory { attribute: String, value: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("k = {k} out of range (at most {max})")]
    KOutOfRange { k: usize, max: usize },

    #[error("too few rows: need at least {needed}, have {have}")]
    TooFewRows { needed: usize, have: usize },

    #[error("degenerate baseline: e* ({e_star}) must exceed e_control ({e_control})")]
    DegenerateBaseline { e_star: f64, e_control: f64 },

    #[error("degenerate target: range of y is zero")]
    DegenerateTarget,

    #[error("overfit target unreachable: f_o = {requested} but at most {achieved:.4} reached")]
    OverfitUnreachable { requested: f64, achieved: f64 },

    #[error("no metrics configured")]
    NoMetrics,

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
