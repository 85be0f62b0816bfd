//! One full step of the convex-integration iteration.
//!
//! Given a baseline pair `(u, R)` solving the relaxed system, the driver
//!
//! 1. gates the run on the symbolic exponent checker,
//! 2. builds the concentrated jets, the temporal profiles and the
//!    perturbation for the concrete knobs `(σ, κ, ν, μ, ω)`,
//! 3. assembles the new pair `(u₁, R₁)` and its pressures slice by slice,
//! 4. verifies the Navier-Stokes-Reynolds residual of both pairs, and
//! 5. measures every quantity of the iteration contract: the space-time
//!    norms of the perturbation and the stresses, the exceptional-set
//!    measure, the off-exceptional Sobolev level of the modification, and
//!    the fractional-regularity norm of the perturbation.
//!
//! An optional energy-pumping pass adds the large-scale corrector on the
//! prescribed good set before the quantities are measured.
//!
//! The driver deliberately exposes only a *finite* iteration: it performs
//! one step (callers can feed the snapshots back in for a second at
//! reduced resolution) and makes no limit-passage claim.

use serde::{Deserialize, Serialize};

use crate::amplitude::TimeCutoff;
use crate::energy::{CorrectorStream, EnergyCorrector};
use crate::error::{EngineError, Result};
use crate::exponents::{check_exponents_str, ExponentReport};
use crate::field::{SymTensorField, VectorField};
use crate::grid::Grid;
use crate::intervals::IntervalSet;
use crate::jets::{build_jets, JetParams};
use crate::norms::sobolev_sup_norm;
use crate::perturbation::{PerturbationBuilder, StressTrajectory};
use crate::stress::{NsrResidual, StressAssembler, StressReport, VelocityTrajectory};
use crate::temporal::{build_temporal, standard_offsets, TemporalParams};

/// Full parameter set for one iteration step.
///
/// The intermittency exponents `(γ, p, r)` are decimal strings so the
/// symbolic checker sees them exactly; the concrete knobs are independent
/// of them (the power-of-λ relations live only in the checker).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Intermittency exponent γ > 0 (decimal string).
    pub gamma: String,
    /// Target Lebesgue exponent p ∈ (1, 2) (decimal string).
    pub p: String,
    /// Stress exponent r > 1 (decimal string).
    pub r: String,
    /// Oscillation σ ∈ N.
    pub sigma: usize,
    /// Temporal concentration κ.
    pub kappa: f64,
    /// Lateral spatial concentration ν.
    pub nu: f64,
    /// Longitudinal spatial concentration μ ≥ ν.
    pub mu: f64,
    /// Acceleration ω.
    pub omega: f64,
    /// Grid size (power of two).
    pub grid_n: usize,
    /// Quadrature oversampling factor.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    /// Band limit for the amplitude coefficient fields.
    pub bandwidth: usize,
    /// Smallness target δ for the new stress.
    pub delta: f64,
    /// Working time interval I.
    pub interval: (f64, f64),
    /// Slow finite-difference step (amplitude/stress time derivatives).
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Fast finite-difference step (composed oscillatory fields).
    #[serde(default = "default_fd_fast")]
    pub fd_fast: f64,
    /// Report time grid: explicit times, or a (coarse, per-component)
    /// refinement of the exceptional set when absent.
    #[serde(default)]
    pub report_times: Option<Vec<f64>>,
    #[serde(default = "default_time_coarse")]
    pub time_coarse: usize,
    #[serde(default = "default_time_per_component")]
    pub time_per_component: usize,
    /// Relative tolerance for the baseline residual identity gate.
    #[serde(default = "default_baseline_tol")]
    pub baseline_tol: f64,
    /// Relative tolerance for the new pair's aggregate residual gate.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
}

fn default_oversample() -> usize {
    2
}
fn default_fd_step() -> f64 {
    1e-3
}
fn default_fd_fast() -> f64 {
    1e-7
}
fn default_time_coarse() -> usize {
    4
}
fn default_time_per_component() -> usize {
    1
}
fn default_baseline_tol() -> f64 {
    1e-8
}
fn default_residual_tol() -> f64 {
    1e-5
}

impl SchemeParams {
    /// The conjugate exponent `q` with `1/r = 1/2 + 1/q`.
    pub fn q(&self) -> Result<f64> {
        let r: f64 = self
            .r
            .parse()
            .map_err(|_| EngineError::InvalidParam(format!("bad r '{}'", self.r)))?;
        if !(1.0 < r && r < 2.0) {
            return Err(EngineError::InvalidParam(format!(
                "q is defined for 1 < r < 2, got r = {r}"
            )));
        }
        Ok(2.0 * r / (2.0 - r))
    }

    /// Run the symbolic checker on this parameter set.
    pub fn check_exponents(&self) -> Result<ExponentReport> {
        check_exponents_str(&self.gamma, &self.p, &self.r)
    }

    /// Validate knobs and resolvability.
    pub fn validate(&self) -> Result<()> {
        if self.sigma == 0 {
            return Err(EngineError::InvalidParam("sigma must be >= 1".into()));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("nu", self.nu),
            ("mu", self.mu),
            ("omega", self.omega),
            ("delta", self.delta),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(EngineError::InvalidParam(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.mu < self.nu {
            return Err(EngineError::InvalidParam(format!(
                "mu = {} must dominate nu = {}",
                self.mu, self.nu
            )));
        }
        if !(self.interval.1 > self.interval.0) {
            return Err(EngineError::InvalidParam(format!(
                "empty working interval ({}, {})",
                self.interval.0, self.interval.1
            )));
        }
        if !self.grid_n.is_power_of_two() || self.grid_n < 64 {
            return Err(EngineError::InvalidParam(format!(
                "grid size must be a power of two >= 64, got {}",
                self.grid_n
            )));
        }
        if self.bandwidth == 0 || self.sigma * self.bandwidth >= self.grid_n / 2 {
            return Err(EngineError::Unresolvable(format!(
                "grid {} cannot resolve sigma * bandwidth = {}",
                self.grid_n,
                self.sigma * self.bandwidth
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_n, self.oversample)
    }
}

/// Optional energy-pumping configuration for the step.
pub struct EnergyTarget<'a> {
    /// Target energy profile e(t) (strictly positive on the good set).
    pub profile: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    /// Good set on which pumping is allowed.
    pub good: IntervalSet,
    /// No pumping before this time.
    pub t_next: f64,
    /// Corrector concentration scale.
    pub mu_c: usize,
}

/// The measured contract quantities of the step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropQuantities {
    /// `‖w‖_{L²(T² × I)}` on the report time grid.
    pub w_l2_spacetime: f64,
    /// `‖R‖_{L¹(T² × I)}` of the input stress on the report time grid.
    pub r_l1_spacetime: f64,
    /// The measured ratio `‖w‖_{L²} / ‖R‖_{L¹}^{1/2}` (the contract bounds
    /// it by an unspecified constant M; we report the measurement).
    pub m_ratio: f64,
    /// `‖R₁‖_{L¹(I; L^r)}` of the new stress.
    pub r1_l1_lr: f64,
    /// `r1_l1_lr ≤ δ`.
    pub r1_below_delta: bool,
    /// Worst `L¹([0,t] ∩ E) / t` over the sampled endpoints.
    pub e_density: f64,
    /// `e_density ≤ δ`.
    pub e_below_delta: bool,
    /// Worst `‖w(t)‖_{W^{1/δ,∞}}` over sampled off-exceptional times.
    pub off_e_sobolev: f64,
    /// `off_e_sobolev ≤ δ`.
    pub off_e_below_delta: bool,
    /// Worst defect of `w(t) = w_o(t)` off the exceptional set (the
    /// concentrated pieces must vanish there identically).
    pub off_e_support_defect: f64,
    /// Worst `‖w(t)‖_{W^{s_p,1}}`-type norm over the report grid, with
    /// `s_p = 1 − 40γ`.
    pub w_sp1: f64,
}

/// One sampled snapshot of the new pair.
pub struct IterationSnapshot {
    pub t: f64,
    pub u1: VectorField,
    pub r1: SymTensorField,
}

/// Everything produced by one iteration step.
pub struct IterationOutcome {
    pub exponent_report: ExponentReport,
    pub exceptional_set: IntervalSet,
    pub residual: NsrResidual,
    pub report: StressReport,
    pub quantities: PropQuantities,
    pub snapshots: Vec<IterationSnapshot>,
}

/// `‖(1 − Δ)^{s/2} v‖_{L¹}`, the spectral proxy for the `W^{s,1}` norm.
pub fn sobolev_s1_norm(v: &VectorField, s: f64) -> f64 {
    let two_pi_sq = (2.0 * std::f64::consts::PI).powi(2);
    let lift = |f: &crate::field::ScalarField| {
        f.spectral_multiplier(|m1, m2| {
            (1.0 + two_pi_sq * (m1 * m1 + m2 * m2) as f64).powf(s / 2.0)
        })
    };
    VectorField::from_comps(lift(v.x()), lift(v.y())).lp_norm(1.0)
}

fn trapezoid_weights(ts: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let left = if i == 0 { ts[0] } else { ts[i - 1] };
        let right = if i + 1 == n { ts[n - 1] } else { ts[i + 1] };
        w[i] = 0.5 * (right - left);
    }
    w
}

/// Run one full iteration step on the baseline pair given by
/// (`velocity`, `stress`).
///
/// Preconditions enforced: the exponent checker passes for the declared
/// `(γ, p, r)`; the baseline pair satisfies its own residual to
/// `baseline_tol` on every report slice.  Any identity failure aborts with
/// the failing component named.  `snapshot_times` selects the instants at
/// which the new pair `(u₁, R₁)` is materialized.
pub fn run_iteration_step(
    params: &SchemeParams,
    velocity: &dyn VelocityTrajectory,
    stress: &dyn StressTrajectory,
    energy: Option<&EnergyTarget>,
    snapshot_times: &[f64],
) -> Result<IterationOutcome> {
    params.validate()?;
    let exponent_report = params.check_exponents()?;
    if !exponent_report.all_pass() {
        return Err(EngineError::Precondition(format!(
            "exponent conditions fail for (gamma, p, r) = ({}, {}, {}): {:?}",
            params.gamma,
            params.p,
            params.r,
            exponent_report.failing()
        )));
    }

    let grid = params.grid()?;
    let jets = build_jets(JetParams {
        bandwidth: Some(params.bandwidth),
        ..JetParams::standard(grid, params.nu, params.mu)
    })?;
    let profiles = build_temporal(TemporalParams {
        kappa: params.kappa,
        sigma: params.sigma,
        omega: params.omega,
        offsets: standard_offsets(4),
    })?;

    // θ-cutoff thresholds from the worst stress magnitude over a coarse
    // scan of the working interval.
    let (t0, t1) = params.interval;
    let mut r_sup: f64 = 0.0;
    for i in 0..=8 {
        let t = t0 + (t1 - t0) * i as f64 / 8.0;
        r_sup = r_sup.max(stress.stress_at(t)?.linf_norm());
    }
    if r_sup == 0.0 {
        return Err(EngineError::Precondition(
            "input stress vanishes identically on the working interval; \
             nothing to concentrate"
                .into(),
        ));
    }
    let cutoff = TimeCutoff::new(params.interval, r_sup)?;
    let builder =
        PerturbationBuilder::new(&jets, &profiles, cutoff, stress, params.bandwidth)?;
    let asm = StressAssembler::new(&builder, velocity, params.fd_step, params.fd_fast)?;
    let e_set = builder.exceptional_set();

    // report time grid inside I
    let times: Vec<f64> = match &params.report_times {
        Some(ts) => ts.clone(),
        None => builder.time_grid(params.time_coarse, params.time_per_component),
    }
    .into_iter()
    .filter(|t| (t0..=t1).contains(t))
    .collect();
    if times.is_empty() {
        return Err(EngineError::InvalidParam(
            "report time grid has no points inside the working interval".into(),
        ));
    }

    // identity gate: the residual verification aborts on a bad baseline,
    // and the aggregate of the new pair must meet the declared tolerance
    let r_exp: f64 = params.r.parse().unwrap();
    let p_exp: f64 = params.p.parse().unwrap();
    let residual = asm.verify_nsr(&times, params.baseline_tol)?;
    if residual.aggregate > params.residual_tol {
        let (worst_t, worst) = residual
            .per_slice
            .iter()
            .cloned()
            .fold((f64::NAN, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        return Err(EngineError::Verification(format!(
            "new pair fails the residual gate: aggregate {:.3e} > {:.1e} \
             (worst slice t = {worst_t}, {worst:.3e})",
            residual.aggregate, params.residual_tol
        )));
    }
    let report = asm.report(&times, r_exp, p_exp, Some(residual.clone()))?;

    // contract quantities on the report grid
    let weights = trapezoid_weights(&times);
    let s_p = 1.0 - 40.0 * params.gamma.parse::<f64>().unwrap();
    let delta = params.delta;
    let mut w_l2_sq = 0.0;
    let mut r_l1 = 0.0;
    let mut w_sp1: f64 = 0.0;
    for (&t, &wt) in times.iter().zip(&weights) {
        let w = builder.w_total(t)?;
        w_l2_sq += wt * w.l2_norm().powi(2);
        r_l1 += wt * stress.stress_at(t)?.lp_norm(1.0);
        w_sp1 = w_sp1.max(sobolev_s1_norm(&w, s_p));
    }
    let w_l2_spacetime = w_l2_sq.sqrt();
    let m_ratio = if r_l1 > 0.0 {
        w_l2_spacetime / r_l1.sqrt()
    } else {
        f64::INFINITY
    };
    let r1_l1_lr = report
        .components
        .get("total")
        .map(|c| c.l1_lr)
        .unwrap_or(f64::NAN);

    // exceptional-set density sup_t L¹([0,t] ∩ E)/t over sampled endpoints
    let mut e_density: f64 = 0.0;
    for i in 1..=16 {
        let t = t0.max(1e-9) + (t1 - t0.max(1e-9)) * i as f64 / 16.0;
        e_density = e_density.max(e_set.measure_within(0.0, t) / t);
    }

    // off-exceptional behavior at the midpoints of the gaps of E inside I
    let mut off_e_sobolev: f64 = 0.0;
    let mut off_e_support_defect: f64 = 0.0;
    for &(a, b) in e_set.complement_within(t0, t1).components() {
        let t = 0.5 * (a + b);
        let w = builder.w_total(t)?;
        let wo = builder.w_o(t)?;
        off_e_support_defect = off_e_support_defect.max(w.sub(&wo).l2_norm());
        let s = 1.0 / delta;
        let lvl = sobolev_sup_norm(w.x(), s).max(sobolev_sup_norm(w.y(), s));
        off_e_sobolev = off_e_sobolev.max(lvl);
    }

    let quantities = PropQuantities {
        w_l2_spacetime,
        r_l1_spacetime: r_l1,
        m_ratio,
        r1_l1_lr,
        r1_below_delta: r1_l1_lr <= delta,
        e_density,
        e_below_delta: e_density <= delta,
        off_e_sobolev,
        off_e_below_delta: off_e_sobolev <= delta,
        off_e_support_defect,
        w_sp1,
    };

    // materialize the new pair where requested, with the optional energy
    // corrector folded in
    let stream = match energy {
        Some(cfg) => Some(CorrectorStream::new(grid, cfg.mu_c)?),
        None => None,
    };
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        let mut u1 = velocity.velocity_at(t)?.add(&builder.w_total(t)?);
        let mut r1 = asm.slice(t)?.r1();
        if let (Some(cfg), Some(stream)) = (energy, &stream) {
            let corrected = CorrectorStream::new(grid, cfg.mu_c)?;
            let _ = stream;
            let corr = EnergyCorrector::new(
                velocity,
                &cfg.profile,
                cfg.good.clone(),
                cfg.t_next,
                corrected,
                params.fd_step,
            );
            u1 = u1.add(&corr.w_bar(t)?);
            r1 = r1.add(&corr.stress_delta(t)?);
        }
        snapshots.push(IterationSnapshot { t, u1, r1 });
    }

    Ok(IterationOutcome {
        exponent_report,
        exceptional_set: e_set,
        residual,
        report,
        quantities,
        snapshots,
    })
}
