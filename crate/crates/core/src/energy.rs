//! Energy pumping corrector.
//!
//! Between concentration steps the iteration adjusts the kinetic energy of
//! the solution toward a prescribed profile `e(t)` by adding a large-scale
//! divergence-free corrector
//!
//! ```text
//! w̄(t) = ρ(t) ∇⊥ψ,      ρ(t)² = (99/100) (e(t) − ‖u(t)‖₂²),
//! ```
//!
//! where `ψ` is a bump concentrated at scale `1/μ_c` with `‖∇ψ‖₂ = 1`, so
//! `‖w̄(t)‖₂ = ρ(t)` exactly.  The pumping profile vanishes on the initial
//! segment `[0, t_next]` and outside the prescribed good set.  The
//! corrected pair absorbs the new error terms into the stress:
//!
//! ```text
//! ΔR = 𝓡(−Δw̄ + ∂_t w̄) + w̄ ∘⊗ u + u ∘⊗ w̄ + w̄ ∘⊗ w̄.
//! ```
//!
//! Because `∇⊥ψ` concentrates on a small cell while `u` is spread out, the
//! energy overlap `⟨u, w̄⟩` decays like `μ_c⁻¹`: the corrector pumps energy
//! almost orthogonally to the existing field.

use crate::bump::bump;
use crate::error::{EngineError, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::grid::Grid;
use crate::intervals::IntervalSet;
use crate::ops::antidiv_r;
use crate::stress::VelocityTrajectory;

/// The corrector stream function: a tensor bump supported in a cell of
/// side `1/μ_c` centered in the fundamental domain, normalized so that
/// `‖∇ψ‖₂ = 1`.
pub struct CorrectorStream {
    psi: ScalarField,
    mu_c: usize,
}

impl CorrectorStream {
    /// Requires the grid to resolve the concentration scale
    /// (`n ≥ 64 μ_c`).
    pub fn new(grid: Grid, mu_c: usize) -> Result<Self> {
        if mu_c == 0 {
            return Err(EngineError::InvalidParam("mu_c must be positive".into()));
        }
        if grid.n() < 64 * mu_c {
            return Err(EngineError::Unresolvable(format!(
                "grid {} cannot resolve corrector scale mu_c = {mu_c} \
                 (need n >= 64 mu_c)",
                grid.n()
            )));
        }
        let m = mu_c as f64;
        let raw = ScalarField::from_fn(grid, |x, y| {
            bump(2.0 * m * (x - 0.5)) * bump(2.0 * m * (y - 0.5))
        });
        // ψ is *defined* as the band-limited truncation of the sampled
        // bump — every identity downstream is exact for it.  The tail
        // check only guards the qualitative concentration picture.
        let bw = grid.nyquist().min(64 * mu_c);
        let (trunc, defect) = raw.truncated(bw);
        if defect > 1e-3 * raw.l2_norm() {
            return Err(EngineError::Unresolvable(format!(
                "corrector bump at mu_c = {mu_c} not spectrally resolved on \
                 grid {} (tail {defect:.2e})",
                grid.n()
            )));
        }
        let grad_l2 = trunc.grad().l2_norm();
        Ok(Self {
            psi: trunc.scaled(1.0 / grad_l2),
            mu_c,
        })
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn mu_c(&self) -> usize {
        self.mu_c
    }

    /// The unit-energy corrector direction `∇⊥ψ`.
    pub fn field(&self) -> VectorField {
        self.psi.grad_perp()
    }
}

/// The energy corrector for a background trajectory `u` and a target
/// energy profile `e(t)`.
pub struct EnergyCorrector<'a, V: VelocityTrajectory + ?Sized> {
    velocity: &'a V,
    energy: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    good: IntervalSet,
    t_next: f64,
    stream: CorrectorStream,
    fd_step: f64,
}

impl<'a, V: VelocityTrajectory + ?Sized> EnergyCorrector<'a, V> {
    pub fn new(
        velocity: &'a V,
        energy: impl Fn(f64) -> f64 + Sync + 'a,
        good: IntervalSet,
        t_next: f64,
        stream: CorrectorStream,
        fd_step: f64,
    ) -> Self {
        Self {
            velocity,
            energy: Box::new(energy),
            good,
            t_next,
            stream,
            fd_step,
        }
    }

    pub fn stream(&self) -> &CorrectorStream {
        &self.stream
    }

    /// The pumping profile: `ρ(t)² = (99/100)(e(t) − ‖u(t)‖₂²)` on the
    /// good set past `t_next`, zero elsewhere.  A nonpositive deficit on
    /// the pumping window is a configuration error.
    pub fn rho(&self, t: f64) -> Result<f64> {
        if t <= self.t_next || !self.good.contains(t) {
            return Ok(0.0);
        }
        let deficit = (self.energy)(t) - self.velocity.velocity_at(t)?.l2_norm().powi(2);
        if deficit <= 0.0 {
            return Err(EngineError::Precondition(format!(
                "energy deficit {deficit:.3e} nonpositive on the good set at \
                 t = {t}"
            )));
        }
        Ok((0.99 * deficit).sqrt())
    }

    /// `ρ̇(t)` by central difference (the profile is smooth wherever the
    /// pumping is active away from the window edges).
    pub fn rho_rate(&self, t: f64) -> Result<f64> {
        let h = self.fd_step;
        Ok((self.rho(t + h)? - self.rho(t - h)?) / (2.0 * h))
    }

    /// The corrector `w̄(t) = ρ(t) ∇⊥ψ`.
    pub fn w_bar(&self, t: f64) -> Result<VectorField> {
        Ok(self.stream.field().scaled(self.rho(t)?))
    }

    /// `∂_t w̄(t) = ρ̇(t) ∇⊥ψ`.
    pub fn w_bar_dt(&self, t: f64) -> Result<VectorField> {
        Ok(self.stream.field().scaled(self.rho_rate(t)?))
    }

    /// The stress increment
    /// `𝓡(−Δw̄ + ∂_t w̄) + w̄ ∘⊗ u + u ∘⊗ w̄ + w̄ ∘⊗ w̄`
    /// that makes `(u + w̄, R + ΔR)` solve the relaxed system again.
    pub fn stress_delta(&self, t: f64) -> Result<SymTensorField> {
        let w = self.w_bar(t)?;
        let u = self.velocity.velocity_at(t)?;
        let linear = antidiv_r(&self.w_bar_dt(t)?.sub(&w.laplacian()));
        let cross = SymTensorField::sym_outer(&w, &u)?.scaled(2.0).deviatoric();
        let self_term = SymTensorField::outer_self(&w)?.deviatoric();
        Ok(linear.add(&cross).add(&self_term))
    }

    /// The energy overlap `|⟨u(t), w̄(t)⟩|` on the torus.
    pub fn interaction(&self, t: f64) -> Result<f64> {
        let u = self.velocity.velocity_at(t)?;
        let w = self.w_bar(t)?;
        Ok(u.dot(&w)?.mean().abs())
    }
}
