use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix must have at least one row and one column")]
    Empty,

    #[error("rank-deficient input: column {column} has negligible norm after orthogonalization")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("loadings are degenerate: {0}")]
    Degenerate(String),

    #[error("invalid cardinality {k} for dimension {p}")]
    InvalidCardinality { k: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bound is vacuous: {0}")]
    VacuousBound(String),

    #[error("exhaustive search too large: {0}")]
    TooLarge(String),

    #[error("infeasible support layout: {0}")]
    InfeasibleSupport(String),

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn mismatch(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
