//! Shared error type and process exit-code mapping.

use thiserror::Error;

/// Errors surfaced by the library. Each variant maps to a stable CLI exit code.
#[derive(Debug, Error)]
pub enum AdrnetError {
    /// Malformed input file. Carries the path and 1-based line number.
    #[error("parse error: {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Structurally valid input that violates a data contract (empty dataset,
    /// filter removed everything, missing descriptor coverage, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Failure writing output files.
    #[error("io error: {0}")]
    Io(String),

    /// Invalid configuration: bad flag combinations, unknown config keys,
    /// widths that violate model invariants.
    #[error("config error: {0}")]
    Config(String),

    /// Non-finite values where finite arithmetic is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Operands with incompatible shapes.
    #[error("dimension mismatch: {0}")]
    Dim(String),

    /// A metric whose value is undefined for the given labels
    /// (e.g. AUC without both classes present).
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
}

impl AdrnetError {
    /// Exit code contract: 0 ok, 2 parse, 3 data, 4 io, 5 config, 6 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            AdrnetError::Parse { .. } => 2,
            AdrnetError::Data(_) | AdrnetError::MetricUndefined(_) => 3,
            AdrnetError::Io(_) => 4,
            AdrnetError::Config(_) | AdrnetError::Dim(_) => 5,
            AdrnetError::Numeric(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, AdrnetError>;
