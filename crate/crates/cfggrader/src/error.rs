use std::path::PathBuf;

use thiserror::Error;

use crate::ir::ParseError;

/// Crate-wide error type.
///
/// The CLI maps these onto exit codes: parse and input-data problems exit
/// with 2, numeric degeneracies with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{}: {source}", path.display())]
    ParseFile { path: PathBuf, source: ParseError },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid graph: {reason}")]
    InvalidGraph { reason: String },

    #[error("weight at ({row}, {col}) is {value}; weights must be finite and non-negative")]
    InvalidWeight { row: usize, col: usize, value: f64 },

    #[error("invalid engine config: {reason}")]
    InvalidConfig { reason: String },

    #[error("no model solutions given; at least one is required")]
    NoModelSolutions,

    #[error("{records} records but {signals} similarity signals; counts must match")]
    MismatchedRecords { records: usize, signals: usize },

    #[error("submission '{id}': {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("{found} graded records; at least 3 are required to fit the model")]
    TooFewRecords { found: usize },

    #[error("submissions without a teacher grade: {}", ids.join(", "))]
    MissingTeacherGrades { ids: Vec<String> },

    #[error(
        "design matrix is rank-deficient: column {column} is linearly dependent \
         on the preceding columns (pivot {pivot:e} below threshold)"
    )]
    RankDeficient { column: &'static str, pivot: f64 },

    #[error("observed minimum {value} is outside [0, 1); cannot rescale")]
    InvalidObservedMin { value: f64 },

    #[error("similarity {value} is outside [0, 1]")]
    SimilarityOutOfRange { value: f64 },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
