//! Seed trajectories for the iteration: fractional heat flows.
//!
//! Any divergence-free, zero-mean initial datum `u0` evolved by the
//! fractional heat semigroup
//!
//! ```text
//! u(t) = e^{−ν_visc t (−Δ)^α} u0,   α ≥ 3/2,
//! ```
//!
//! solves the Navier-Stokes-Reynolds system with the stress
//!
//! ```text
//! R = 𝓡(∂_t u − Δu) + u ∘⊗ u,   (u ∘⊗ u)_{ij} = u_i u_j − ½δ_{ij}|u|²,
//! ```
//!
//! and pressure `−½|u|²`: every mode evolves by an exact scalar factor, so
//! `∂_t u` is computable without finite differences and the residual is
//! machine-zero.  The restriction `α ≥ 3/2` keeps `𝓡(∂_t u − Δu)`
//! integrable down to `t = 0` for merely square-summable data.
//!
//! The same object serves as the velocity *and* stress trajectory for the
//! one-step driver, so an iteration can start from nothing but an initial
//! spectrum.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EngineError, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::grid::Grid;
use crate::ops::antidiv_r;
use crate::perturbation::StressTrajectory;
use crate::quad;
use crate::stress::{StressAssembler, VelocityTrajectory};

/// A divergence-free field evolved by `e^{−ν_visc t(−Δ)^α}`.
pub struct FractionalHeatFlow {
    u0: VectorField,
    alpha: f64,
    nu_visc: f64,
}

impl FractionalHeatFlow {
    /// Requires `α ≥ 3/2`, `ν_visc > 0`, and `u0` divergence-free with
    /// zero mean (both checked).
    pub fn new(u0: VectorField, alpha: f64, nu_visc: f64) -> Result<Self> {
        if alpha < 1.5 {
            return Err(EngineError::InvalidParam(format!(
                "dissipation order alpha = {alpha} < 3/2: the stress of the \
                 semigroup flow is not integrable down to t = 0"
            )));
        }
        if nu_visc <= 0.0 {
            return Err(EngineError::InvalidParam(format!(
                "viscosity must be positive, got {nu_visc}"
            )));
        }
        let scale = u0.l2_norm();
        let mean = u0.mean();
        if mean[0].hypot(mean[1]) > 1e-12 * (1.0 + scale) {
            return Err(EngineError::Precondition(
                "semigroup initial datum must have zero mean".into(),
            ));
        }
        if u0.div().l2_norm() > 1e-10 * (1.0 + scale * u0.bandwidth() as f64) {
            return Err(EngineError::Precondition(
                "semigroup initial datum must be divergence-free".into(),
            ));
        }
        Ok(Self { u0, alpha, nu_visc })
    }

    pub fn initial(&self) -> &VectorField {
        &self.u0
    }

    pub fn grid(&self) -> Grid {
        self.u0.grid()
    }

    /// The decay rate `ν_visc (4π²|m|²)^α` of mode `m`.
    fn rate(&self, m1: i64, m2: i64) -> f64 {
        let k2 = 4.0 * std::f64::consts::PI.powi(2) * (m1 * m1 + m2 * m2) as f64;
        self.nu_visc * k2.powf(self.alpha)
    }

    fn apply_modewise(&self, factor: impl Fn(f64) -> f64 + Copy) -> VectorField {
        let fx = self.u0.x().spectral_multiplier(|m1, m2| factor(self.rate(m1, m2)));
        let fy = self.u0.y().spectral_multiplier(|m1, m2| factor(self.rate(m1, m2)));
        VectorField::from_comps(fx, fy)
    }

    /// `u(t)`, exact on every mode.
    pub fn velocity(&self, t: f64) -> VectorField {
        self.apply_modewise(|r| (-r * t).exp())
    }

    /// `∂_t u(t) = −ν_visc(−Δ)^α u(t)`, exact on every mode.
    pub fn velocity_rate(&self, t: f64) -> VectorField {
        self.apply_modewise(|r| -r * (-r * t).exp())
    }

    /// The stress `𝓡(∂_t u − Δu) + u ∘⊗ u` (symmetric and traceless).
    pub fn stress(&self, t: f64) -> Result<SymTensorField> {
        let u = self.velocity(t);
        let smooth = self.velocity_rate(t).sub(&u.laplacian());
        let linear = antidiv_r(&smooth);
        let quadratic = SymTensorField::outer_self(&u)?.deviatoric();
        Ok(linear.add(&quadratic))
    }

    /// Relative Navier-Stokes-Reynolds residual of `(u, R)` at time `t`,
    /// with the pressure recovered spectrally from the momentum balance.
    pub fn residual(&self, t: f64) -> Result<f64> {
        let u = self.velocity(t);
        let dtu = self.velocity_rate(t);
        let r = self.stress(t)?;
        let p = StressAssembler::baseline_pressure(&u, &dtu, &r)?;
        let res = dtu
            .add(&crate::field::div_outer(&u, &u)?)
            .add(&p.grad())
            .sub(&u.laplacian())
            .sub(&r.div());
        let scale = dtu
            .l2_norm()
            .max(u.laplacian().l2_norm())
            .max(r.div().l2_norm());
        Ok(if scale == 0.0 {
            res.l2_norm()
        } else {
            res.l2_norm() / scale
        })
    }

    /// `‖R(t)‖_{L¹(T²)}`.
    pub fn stress_l1(&self, t: f64) -> Result<f64> {
        Ok(self.stress(t)?.lp_norm(1.0))
    }

    /// `∫_{t0}^{t1} ‖R(t)‖_{L¹} dt` by composite Gauss-Legendre
    /// quadrature.
    pub fn stress_l1_time_integral(
        &self,
        t0: f64,
        t1: f64,
        panels: usize,
        order: usize,
    ) -> f64 {
        quad::integrate(
            |t| self.stress_l1(t).expect("stress assembly on a fixed grid"),
            t0,
            t1,
            panels,
            order,
        )
    }
}

impl VelocityTrajectory for FractionalHeatFlow {
    fn velocity_at(&self, t: f64) -> Result<VectorField> {
        Ok(self.velocity(t))
    }

    fn velocity_dt(&self, t: f64) -> Result<VectorField> {
        Ok(self.velocity_rate(t))
    }
}

impl StressTrajectory for FractionalHeatFlow {
    fn stress_at(&self, t: f64) -> Result<SymTensorField> {
        self.stress(t)
    }
}

/// Build the semigroup trajectory pair from an initial datum: the returned
/// flow serves as both the velocity and the stress trajectory.
pub fn universality_init(
    u0: VectorField,
    alpha: f64,
    nu_visc: f64,
) -> Result<FractionalHeatFlow> {
    FractionalHeatFlow::new(u0, alpha, nu_visc)
}

/// A random divergence-free, zero-mean field whose velocity coefficients
/// decay like `|m|^{−decay}` up to bandwidth `bw`, with uniformly random
/// phases.  Built as `∇⊥ψ` from a stream function with `|ψ̂(m)| ∼
/// |m|^{−decay−1}`, so incompressibility is exact.
pub fn rough_field(grid: Grid, bw: usize, decay: f64, seed: u64) -> Result<VectorField> {
    if bw == 0 || bw > grid.nyquist() {
        return Err(EngineError::Unresolvable(format!(
            "bandwidth {bw} not active on grid {}",
            grid.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let mut hat = Array2::<Complex64>::zeros((n, n));
    let b = bw as i64;
    let two_pi = 2.0 * std::f64::consts::PI;
    for m1 in -b..=b {
        for m2 in -b..=b {
            // one representative per conjugate pair
            if m1 < 0 || (m1 == 0 && m2 <= 0) {
                continue;
            }
            if m1 * m1 + m2 * m2 > b * b {
                continue;
            }
            let amp = ((m1 * m1 + m2 * m2) as f64)
                .sqrt()
                .powf(-(decay + 1.0))
                / two_pi;
            let phase = rng.gen::<f64>() * two_pi;
            let c = Complex64::from_polar(amp, phase);
            hat[[grid.index_of(m1), grid.index_of(m2)]] = c;
            hat[[grid.index_of(-m1), grid.index_of(-m2)]] = c.conj();
        }
    }
    let psi = ScalarField::from_coeffs(grid, hat, bw);
    Ok(psi.grad_perp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_mode(grid: Grid) -> VectorField {
        // ∇⊥ sin(2πx₁) = (0, 2π cos(2πx₁))
        ScalarField::from_fn(grid, |x, _| (2.0 * std::f64::consts::PI * x).sin())
            .truncated(1)
            .0
            .grad_perp()
    }

    #[test]
    fn single_mode_semigroup_is_exact() {
        let grid = Grid::new(32, 2).unwrap();
        let u0 = single_mode(grid);
        let flow = FractionalHeatFlow::new(u0.clone(), 1.5, 0.7).unwrap();
        for t in [0.0, 0.01, 0.3, 1.0] {
            let factor =
                (-0.7 * (4.0 * std::f64::consts::PI.powi(2)).powf(1.5) * t).exp();
            let defect = flow.velocity(t).sub(&u0.scaled(factor)).l2_norm();
            assert!(defect <= 1e-12 * u0.l2_norm(), "t={t}: {defect:.3e}");
            // single harmonic: u∘⊗u has constant trace part removed and the
            // linear part is a gradient flow, but the full residual must
            // still vanish identically
            assert!(flow.residual(t).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn semigroup_contracts_monotonically() {
        let grid = Grid::new(64, 2).unwrap();
        let u0 = rough_field(grid, 20, 1.2, 11).unwrap();
        let flow = FractionalHeatFlow::new(u0.clone(), 1.5, 1e-4).unwrap();
        let times = [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0];
        let mut prev_energy = f64::INFINITY;
        let mut prev_dist = f64::INFINITY;
        for &t in times.iter().rev() {
            let u = flow.velocity(t);
            let d = u.sub(&u0).l2_norm();
            assert!(d <= prev_dist + 1e-15, "distance not monotone at t={t}");
            prev_dist = d;
        }
        for &t in &times {
            let e = flow.velocity(t).l2_norm();
            assert!(e <= prev_energy + 1e-15, "energy not monotone at t={t}");
            prev_energy = e;
        }
        assert!(flow.velocity(1e-9).sub(&u0).l2_norm() < 1e-6 * u0.l2_norm());
    }

    #[test]
    fn rough_flow_residual_is_machine_zero() {
        let grid = Grid::new(64, 2).unwrap();
        let u0 = rough_field(grid, 20, 1.2, 7).unwrap();
        let flow = FractionalHeatFlow::new(u0, 1.5, 5e-4).unwrap();
        for t in [0.0, 0.02, 0.37, 0.9] {
            let res = flow.residual(t).unwrap();
            assert!(res <= 1e-8, "t={t}: residual {res:.3e}");
        }
    }

    #[test]
    fn stress_is_symmetric_traceless() {
        let grid = Grid::new(64, 2).unwrap();
        let u0 = rough_field(grid, 16, 1.2, 3).unwrap();
        let flow = FractionalHeatFlow::new(u0, 2.0, 1e-3).unwrap();
        let r = flow.stress(0.1).unwrap();
        assert!(r.traceless_defect() <= 1e-12);
    }

    #[test]
    fn rough_spectrum_decay_matches_request() {
        let grid = Grid::new(128, 2).unwrap();
        let u0 = rough_field(grid, 40, 1.2, 5).unwrap();
        // amplitude of an |m| = k mode ≈ k^{−1.2}: ratio test on axis modes
        let hat = u0.y().hat().clone();
        let a4 = hat[[grid.index_of(4), grid.index_of(0)]].norm();
        let a32 = hat[[grid.index_of(32), grid.index_of(0)]].norm();
        assert_relative_eq!(a4 / a32, 8f64.powf(1.2), max_relative = 1e-10);
        assert!(u0.div().l2_norm() <= 1e-12 * u0.l2_norm());
    }

    #[test]
    fn stress_l1_integral_self_converges() {
        let grid = Grid::new(64, 2).unwrap();
        let u0 = rough_field(grid, 20, 1.2, 13).unwrap();
        let flow = FractionalHeatFlow::new(u0, 1.5, 2e-3).unwrap();
        let coarse = flow.stress_l1_time_integral(0.0, 0.5, 4, 6);
        let fine = flow.stress_l1_time_integral(0.0, 0.5, 8, 8);
        assert!(fine.is_finite() && fine > 0.0);
        assert!(
            (coarse - fine).abs() <= 0.01 * fine,
            "coarse {coarse:.6e} vs fine {fine:.6e}"
        );
    }

    #[test]
    fn rejects_unsuitable_parameters() {
        let grid = Grid::new(32, 2).unwrap();
        let u0 = single_mode(grid);
        assert!(FractionalHeatFlow::new(u0.clone(), 1.2, 1.0).is_err());
        assert!(FractionalHeatFlow::new(u0.clone(), 1.5, 0.0).is_err());
        // non-divergence-free datum
        let bad = ScalarField::from_fn(grid, |x, _| (2.0 * std::f64::consts::PI * x).sin())
            .truncated(1)
            .0
            .grad();
        assert!(FractionalHeatFlow::new(bad, 1.5, 1.0).is_err());
        // nonzero mean
        let shifted = u0.add(&VectorField::from_comps(
            ScalarField::constant(grid, 0.5),
            ScalarField::zeros(grid),
        ));
        assert!(FractionalHeatFlow::new(shifted, 1.5, 1.0).is_err());
    }
}
