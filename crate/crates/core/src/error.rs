//! Crate-wide error type.
//!
//! Configuration-class errors (bad manifold files, unresolved references,
//! dimension mismatches) are distinguished from runtime evaluation and domain
//! errors so the CLI can map them to distinct exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Expression or file syntax error. `col` is 1-based within `context`.
    #[error("parse error in {context} at column {col}: {message}")]
    Parse {
        context: String,
        col: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unresolved reference: {0}")]
    UnresolvedRef(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("point outside the domain of chart `{chart}`")]
    OutsideDomain { chart: String },

    /// Runtime evaluation failure; `node` identifies the offending operation
    /// and `col` its 1-based position in the source expression.
    #[error("evaluation error: {kind} at `{node}` (column {col})")]
    Eval {
        kind: EvalErrorKind,
        node: String,
        col: usize,
    },

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("no overlap samples found for transition {from} -> {to}")]
    EmptyOverlap { from: String, to: String },

    #[error("spray on chart `{chart}` is not fiberwise quadratic (residual {residual:.3e})")]
    NotFiberwiseQuadratic { chart: String, residual: f64 },

    #[error("splitting rejected: {reason} (residual {residual:.3e})")]
    SplittingRejected { reason: String, residual: f64 },

    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    /// Square root of a negative value, or of zero when derivatives are
    /// requested (the derivative is unbounded there).
    SqrtDomain,
    /// Negative integer power of zero.
    ZeroToNegativePower,
}

impl std::fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalErrorKind::DivisionByZero => write!(f, "division by zero"),
            EvalErrorKind::SqrtDomain => write!(f, "square root outside differentiable domain"),
            EvalErrorKind::ZeroToNegativePower => write!(f, "zero raised to a negative power"),
        }
    }
}

impl Error {
    /// Errors that indicate an invalid definition rather than a failed
    /// computation; the CLI exits with status 2 on these.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Config(_)
                | Error::UnresolvedRef(_)
                | Error::DimensionMismatch(_)
                | Error::LevelOutOfRange { .. }
                | Error::Io(_)
        )
    }
}
