//! Crate-wide error type.

use thiserror::Error;

/// A single violated model invariant, collected during validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("off-diagonal rate A({row},{col}) = {value} is negative")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row} of the rate matrix sums to {sum} (must be 0 within tolerance)")]
    RowSumNonZero { row: usize, sum: f64 },
    #[error("noise covariance R = {value} must be positive")]
    NonPositiveR { value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry: {0}")]
    NonFinite(String),
}

/// Model validation reports every violated invariant, not just the first.
#[derive(Debug, Clone, Error)]
#[error("model validation failed: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),

    /// States whose communicating class is not closed. State numbers are 1-based.
    #[error("transient states present (class not closed): {states:?}")]
    TransientStatesPresent { states: Vec<usize> },

    #[error("numerical rank failure: {0}")]
    NumericalRankFailure(String),

    #[error("expected {expected} mixture weights, got {got}")]
    WeightCountMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Likelihood normalizer underflowed; reachable only with NaN inputs.
    #[error("degenerate likelihood: normalizer is not positive")]
    DegenerateLikelihood,

    /// The three stabilizability tests disagreed. A bug trap, not a user error.
    #[error("internal equivalence violation: {0}")]
    InternalEquivalenceViolation(String),

    #[error("absolute continuity violated: mu charges state {state} but nu does not")]
    AbsoluteContinuityViolation { state: usize },

    #[error("prior is not invariant: max |A^T mu| = {residual}")]
    NotInvariantPrior { residual: f64 },

    #[error(
        "model is stabilizable; the necessity demonstration requires a non-stabilizable model"
    )]
    ModelIsStabilizable,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
