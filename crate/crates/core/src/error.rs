use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Variants fall into three groups that callers (the CLI in particular) map
/// onto distinct outcomes: malformed input, numerical breakdown, and
/// selection exhaustion.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum BasisError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("count mismatch: expected {expected} vectors, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("vector {index} is null")]
    NullVector { index: usize },

    #[error("vectors are linearly dependent: singular value ratio {ratio:e} below threshold {threshold:e}")]
    Dependent { ratio: f64, threshold: f64 },

    #[error("vector lies outside the span: relative residual {residual:e} exceeds {tolerance:e}")]
    OutsideSpan { residual: f64, tolerance: f64 },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("enumeration limit exceeded: {count} exceeds {limit}")]
    EnumerationLimit { count: usize, limit: usize },

    #[error("certificate was refused (lambda = {lambda:?}); the sandwich bounds do not apply")]
    Refused { lambda: f64 },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("coordinate-null hypotheses fail at coordinate {coordinate} (tail max {value:e} > tol {tol:e})")]
    HypothesesFailed {
        coordinate: usize,
        value: f64,
        tol: f64,
    },

    #[error("candidate norm {norm:e} at index {index} is below delta {delta:e}")]
    BelowDelta { index: usize, norm: f64, delta: f64 },

    #[error("insufficient candidates: built {built} of {required} blocks from {available} candidates")]
    InsufficientCandidates {
        built: usize,
        required: usize,
        available: usize,
    },

    #[error("selection not certified after {retries} retries (last lambda_sel = {lambda:?})")]
    RetriesExceeded { retries: usize, lambda: f64 },
}

impl BasisError {
    /// True for failures caused by numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            BasisError::Dependent { .. } | BasisError::OutsideSpan { .. } | BasisError::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, BasisError>;
