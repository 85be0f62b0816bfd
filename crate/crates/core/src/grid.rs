//! Uniform periodic grid on the unit torus T² = R²/Z².
//!
//! Samples live at x = (i/n, j/n); the companion spectral layout stores
//! Fourier coefficients c_m for integer frequencies m = (m₁, m₂) with
//! |m_i| ≤ n/2, in standard FFT order (index a ↦ a for a ≤ n/2, a − n
//! otherwise).  All differential operators act as multiplication by 2πi·m.

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// Uniform n×n sampling of the torus with an oversampling factor for norm
/// quadrature grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    oversample: usize,
}

impl Grid {
    /// Create a grid with `n` samples per axis (power of two ≥ 8) and the
    /// given oversampling factor (≥ 1) for L^p quadrature.
    pub fn new(n: usize, oversample: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(EngineError::InvalidParam(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if oversample < 1 {
            return Err(EngineError::InvalidParam(
                "oversample factor must be >= 1".into(),
            ));
        }
        Ok(Self { n, oversample })
    }

    /// Grid with the default oversampling factor of 4.
    pub fn with_default_oversample(n: usize) -> Result<Self> {
        Self::new(n, 4)
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Oversampling factor for norm quadrature.
    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Largest frequency magnitude the grid can carry without ambiguity
    /// (the Nyquist row n/2 is excluded so every active mode has a
    /// conjugate partner).
    pub fn nyquist(&self) -> usize {
        self.n / 2 - 1
    }

    /// Largest active frequency for which *quadratic* products stay exactly
    /// representable on this grid (the spec's dealiasing constraint
    /// n ≥ 4 × max active frequency).
    pub fn max_active(&self) -> usize {
        self.n / 4
    }

    /// Signed frequency for storage index `a`.
    #[inline]
    pub fn freq(&self, a: usize) -> i64 {
        if a <= self.n / 2 {
            a as i64
        } else {
            a as i64 - self.n as i64
        }
    }

    /// Storage index for signed frequency `m` (must satisfy |m| ≤ n/2).
    #[inline]
    pub fn index_of(&self, m: i64) -> usize {
        debug_assert!(m.unsigned_abs() as usize <= self.n / 2);
        m.rem_euclid(self.n as i64) as usize
    }

    /// Same torus, different resolution.
    pub fn with_n(&self, n: usize) -> Result<Grid> {
        Grid::new(n, self.oversample)
    }
}

/// Smallest power of two ≥ `x` (and ≥ 8).
pub fn next_pow2(x: usize) -> usize {
    x.max(8).next_power_of_two()
}
