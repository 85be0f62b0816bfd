//! Project-wide numerical tolerances.
//!
//! Every identity check in the library compares against one of these named
//! constants rather than an ad-hoc literal, so the accuracy contract is
//! auditable in one place.

/// Relative tolerance for exact spectral identities (divergence of an
/// antidivergence, Leray idempotence, curl of a gradient, ...).
pub const TOL_IDENTITY: f64 = 1e-12;

/// Relative tolerance for Parseval agreement between quadrature and the
/// spectral sum of squares.
pub const TOL_PARSEVAL: f64 = 1e-10;

/// Relative tolerance for identities that pass through one band-limiting or
/// normalization step (jet structure identities, amplitude algebra).
pub const TOL_STRUCTURE: f64 = 1e-10;

/// Relative tolerance for the jet normalization ∮ W_k ⊗ W_k = e_k ⊗ e_k.
pub const TOL_JET_NORMALIZATION: f64 = 1e-8;

/// Relative tolerance for identities that involve a finite-difference time
/// derivative of smooth (slow) coefficients.
pub const TOL_TIME_FD: f64 = 1e-6;

/// Relative tolerance for the end-to-end Navier-Stokes-Reynolds residual and
/// the stress-decomposition completeness identity.
pub const TOL_RESIDUAL: f64 = 1e-5;

/// Positivity floor for squared amplitude coefficients; anything below
/// −`TOL_IDENTITY` is a geometry violation, anything in between is clamped.
pub const AMPLITUDE_FLOOR: f64 = 1e-8;

/// Relative spectral-tail threshold accepted when band-limiting a field that
/// was produced by a pointwise non-polynomial operation.
pub const TOL_TRUNCATION_TAIL: f64 = 1e-9;
