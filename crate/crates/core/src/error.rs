//! Error type shared by the whole engine.

use thiserror::Error;

/// Unified error for construction, validation and verification failures.
#[derive(Debug, Error)]
pub enum EngineError {
    /// A requested operation would alias: the result has active frequencies
    /// at or beyond the Nyquist limit of every admissible grid.
    #[error("aliasing: {0}")]
    Aliasing(String),

    /// Grid cannot resolve the requested structure (concentration scale,
    /// dilation factor, ...).
    #[error("grid cannot resolve: {0}")]
    Unresolvable(String),

    /// Invalid parameter combination.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A mathematical precondition failed (nonzero mean where zero mean is
    /// required, matrix outside the geometric-lemma ball, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A verification (identity or estimate) exceeded its tolerance.
    #[error("verification failed: {0}")]
    Verification(String),

    /// Snapshot / report I/O failure.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed snapshot or report payload.
    #[error("format: {0}")]
    Format(String),
}

/// Convenient result alias.
pub type Result<T> = std::result::Result<T, EngineError>;
