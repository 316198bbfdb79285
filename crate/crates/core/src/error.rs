//! Error type shared across the crate.

use crate::granulation::GranulationResult;
use crate::numerics::QpSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input data (ragged CSV rows, non-numeric fields, ...).
    #[error("parse error{}: {message}", row_context(.row))]
    Parse { row: Option<usize>, message: String },

    /// Structurally valid input that violates the expected shape
    /// (e.g. a label column with more or fewer than two distinct values).
    #[error("schema error: {0}")]
    Schema(String),

    /// Data that cannot support the requested operation
    /// (single-class training set, degenerate split, empty fold, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A configuration value outside its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Granulation exceeded its iteration budget; the partial result is
    /// attached so callers can inspect how far splitting got.
    #[error("granulation did not converge within {iterations} iterations")]
    GranulationConvergence {
        iterations: usize,
        partial: Box<GranulationResult>,
    },

    /// The box-QP sweep exhausted `max_sweeps`; the best iterate so far is
    /// attached.
    #[error("QP solver did not converge within {sweeps} sweeps (kkt residual {kkt:.3e})")]
    SolverConvergence {
        sweeps: usize,
        kkt: f64,
        best: Box<QpSolution>,
    },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A coordinate sweep requires strictly positive diagonal entries.
    #[error("QP matrix has non-positive diagonal entry at index {index}")]
    IndefiniteDiagonal { index: usize },

    /// The active-set enumeration oracle refuses problems it cannot
    /// enumerate exhaustively.
    #[error("active-set oracle refuses dimension {k} (limit {limit})")]
    OracleTooLarge { k: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Operation not defined for this model or input variant.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn row_context(row: &Option<usize>) -> String {
    match row {
        Some(r) => format!(" at data row {r}"),
        None => String::new(),
    }
}
