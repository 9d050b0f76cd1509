//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {context} (got {got_rows}x{got_cols}, expected {want})")]
    DimensionMismatch {
        context: &'static str,
        got_rows: usize,
        got_cols: usize,
        want: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NonConvergence {
        iterations: usize,
        last_estimate: f64,
    },

    #[error("degenerate code matrix: all entries (numerically) zero")]
    DegenerateCodeMatrix,

    #[error("column {index} is (numerically) zero")]
    ZeroColumn { index: usize },

    #[error("sparse coding infeasible: residual floor {floor} exceeds target {target}")]
    Infeasible { floor: f64, target: f64 },

    #[error("sparse coding failed on column {column} at iteration {iteration}: {source}")]
    ColumnAbort {
        column: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
