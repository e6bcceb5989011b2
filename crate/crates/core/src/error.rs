//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimensions must be nonzero (got {rows}x{cols})")]
    ZeroDimension { rows: usize, cols: usize },

    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength {
        len: usize,
        rows: usize,
        cols: usize,
    },

    #[error("shape mismatch: {a_rows}x{a_cols} vs {b_rows}x{b_cols}")]
    ShapeMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid mask pattern: {0}")]
    InvalidPattern(String),

    #[error("row index {row} out of range for length {len}")]
    RowOutOfRange { row: usize, len: usize },

    #[error("masks overlap at ({row}, {col}); a disjoint union would double-count softmax terms")]
    MaskOverlap { row: usize, col: usize },

    #[error("invalid carried softmax state: {0}")]
    InvalidState(String),

    #[error("unknown algorithm tag `{0}`")]
    UnknownAlgorithm(String),

    #[error("invalid memory accounting: {0}")]
    InvalidAccounting(String),

    #[error(
        "no positive context length: budget {budget} bytes is below the fixed cost {fixed} bytes"
    )]
    BudgetBelowFixed { budget: u64, fixed: f64 },

    #[error("context length is unbounded: every per-token and quadratic coefficient is zero")]
    UnboundedContext,

    #[error("estimated footprint {required} bytes exceeds the configured cap {cap} bytes")]
    FootprintExceeded { required: u64, cap: u64 },

    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),

    #[error("mask file: {0}")]
    MaskFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
