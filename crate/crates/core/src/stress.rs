//! Assembly of the new Reynolds stress R₁ = R_lin + R_cor + R_osc with
//! R_osc = R_osc,x + R_osc,t + R_osc,a + R_rem, the pressures p₁–p₄, and the
//! residual check of the perturbed Navier-Stokes-Reynolds system.
//!
//! Every component is produced together with the pressure that absorbs the
//! gradient part of its divergence, and each carries an independently
//! computable reference field (`e1_reference` … `e3_reference`) so the
//! defining identity
//!
//!   div R_component + ∇p_component = E_component
//!
//! can be cross-checked by the tests through a different spectral code path
//! (Leray projection versus antidivergence).  Time derivatives of
//! amplitude-bearing quantities use 6th-order central differences with step
//! `fd_step`; g_k-derivatives and the jet transport term are analytic.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::amplitude::standard_units;
use crate::error::{EngineError, Result};
use crate::field::{div_outer, ScalarField, SymTensorField, VectorField};
use crate::ops::{antidiv_b, antidiv_r};
use crate::perturbation::PerturbationBuilder;

/// 6th-order central first-derivative stencil (offset, coefficient·60).
const FD6: [(f64, f64); 6] = [
    (-3.0, -1.0),
    (-2.0, 9.0),
    (-1.0, -45.0),
    (1.0, 45.0),
    (2.0, -9.0),
    (3.0, 1.0),
];

/// A background velocity trajectory with an analytic time derivative.
pub trait VelocityTrajectory: Sync {
    fn velocity_at(&self, t: f64) -> Result<VectorField>;
    fn velocity_dt(&self, t: f64) -> Result<VectorField>;
}

/// The resting background u ≡ 0.
pub struct ZeroVelocity(pub crate::grid::Grid);

impl VelocityTrajectory for ZeroVelocity {
    fn velocity_at(&self, _t: f64) -> Result<VectorField> {
        Ok(VectorField::zeros(self.0))
    }
    fn velocity_dt(&self, _t: f64) -> Result<VectorField> {
        Ok(VectorField::zeros(self.0))
    }
}

/// The three parts of the linear error: −R(Δw), R(∂_t(w_p + w_c)), and the
/// drift terms R(div(u⊗w) + div(w⊗u)).
pub struct LinearParts {
    pub lap: SymTensorField,
    pub acc: SymTensorField,
    pub dri: SymTensorField,
}

impl LinearParts {
    pub fn total(&self) -> SymTensorField {
        self.lap.add(&self.acc).add(&self.dri)
    }
}

/// One assembled time slice of the stress decomposition.
pub struct StressSlice {
    pub t: f64,
    pub theta: f64,
    pub osc_x: SymTensorField,
    pub p1: ScalarField,
    pub osc_a: SymTensorField,
    pub p2: ScalarField,
    pub osc_t: SymTensorField,
    pub p3: ScalarField,
    pub rem: SymTensorField,
    pub p4: ScalarField,
    pub cor: SymTensorField,
    pub lin: LinearParts,
}

impl StressSlice {
    /// R_osc = R_osc,x + R_osc,t + R_osc,a + R_rem.
    pub fn r_osc(&self) -> SymTensorField {
        self.osc_x.add(&self.osc_t).add(&self.osc_a).add(&self.rem)
    }

    /// The full new stress R₁.
    pub fn r1(&self) -> SymTensorField {
        self.r_osc().add(&self.cor).add(&self.lin.total())
    }

    /// P = −(p₁ + p₂ + p₃ + p₄); the new pressure is the baseline pressure
    /// plus this field.
    pub fn p_total(&self) -> ScalarField {
        self.p1.add(&self.p2).add(&self.p3).add(&self.p4).scaled(-1.0)
    }

    /// Named components in report order.
    pub fn components(&self) -> Vec<(&'static str, SymTensorField)> {
        vec![
            ("osc_x", self.osc_x.clone()),
            ("osc_t", self.osc_t.clone()),
            ("osc_a", self.osc_a.clone()),
            ("rem", self.rem.clone()),
            ("cor", self.cor.clone()),
            ("lin_lap", self.lin.lap.clone()),
            ("lin_acc", self.lin.acc.clone()),
            ("lin_dri", self.lin.dri.clone()),
            ("total", self.r1()),
        ]
    }
}

/// Residual of the perturbed system over a set of time slices.
#[derive(Debug, Clone, Serialize)]
pub struct NsrResidual {
    /// Worst relative residual of the *input* pair (u, R) over the slices.
    pub baseline: f64,
    /// (t, relative residual of (u₁, R₁, p₁)) per slice.
    pub per_slice: Vec<(f64, f64)>,
    /// √(Σ‖res‖² / Σ‖scale‖²) over the slices.
    pub aggregate: f64,
}

/// Space-time norms of one component: L¹_t L^r_x, L∞_t L^p_x, L²_{t,x}.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentNorms {
    pub l1_lr: f64,
    pub linf_lp: f64,
    pub l2_l2: f64,
}

/// Per-slice spatial norms, aligned with `StressSlice::components` order.
#[derive(Debug, Clone, Serialize)]
pub struct SliceNorms {
    pub t: f64,
    pub lr: Vec<f64>,
    pub lp: Vec<f64>,
    pub l2: Vec<f64>,
}

/// Aggregated stress report, serializable to JSON, with a CSV table of
/// per-slice norms for plotting.
#[derive(Debug, Clone, Serialize)]
pub struct StressReport {
    pub schema_version: u32,
    pub r_exponent: f64,
    pub p_exponent: f64,
    pub component_names: Vec<String>,
    pub components: BTreeMap<String, ComponentNorms>,
    pub slices: Vec<SliceNorms>,
    pub nsr_residual: Option<NsrResidual>,
}

impl StressReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| EngineError::Format(e.to_string()))
    }

    /// CSV rows `t, <component L^r norms...>`.
    pub fn csv(&self) -> String {
        let mut out = String::from("t");
        for name in &self.component_names {
            out.push_str(&format!(",{name}_lr,{name}_lp,{name}_l2"));
        }
        out.push('\n');
        for s in &self.slices {
            out.push_str(&format!("{:.12e}", s.t));
            for i in 0..self.component_names.len() {
                out.push_str(&format!(",{:.12e},{:.12e},{:.12e}", s.lr[i], s.lp[i], s.l2[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Slice-wise assembler of the stress decomposition.
pub struct StressAssembler<'a> {
    pub builder: &'a PerturbationBuilder<'a>,
    pub velocity: &'a dyn VelocityTrajectory,
    /// Step of the 6th-order central differences for amplitude-bearing time
    /// derivatives (slow scale: θ and the stress trajectory).
    pub fd_step: f64,
    /// Step for differencing composed fields, which oscillate at the phase
    /// rate ~2π·bandwidth·ωg and need a far smaller step.
    pub fd_fast: f64,
}

impl<'a> StressAssembler<'a> {
    pub fn new(
        builder: &'a PerturbationBuilder<'a>,
        velocity: &'a dyn VelocityTrajectory,
        fd_step: f64,
        fd_fast: f64,
    ) -> Result<Self> {
        for h in [fd_step, fd_fast] {
            if !(h > 0.0) || !h.is_finite() {
                return Err(EngineError::InvalidParam(format!(
                    "finite-difference step must be positive, got {h}"
                )));
            }
        }
        Ok(Self { builder, velocity, fd_step, fd_fast })
    }

    fn sigma(&self) -> f64 {
        self.builder.profiles.sigma() as f64
    }

    /// Directions whose burst or burst-derivative is nonzero at t.
    fn active_closure(&self, t: f64) -> Vec<usize> {
        (0..self.builder.jets.len())
            .filter(|&k| {
                self.builder.profiles.g(k, t) != 0.0 || self.builder.profiles.g_deriv(k, t) != 0.0
            })
            .collect()
    }

    /// 6th-order time derivatives (ȧ_k, ∂_t(a_k²)) of the amplitude fields.
    fn amp_rate(&self, t: f64) -> Result<(Vec<ScalarField>, Vec<ScalarField>)> {
        let h = self.fd_step;
        let mut a_dot: Vec<Option<ScalarField>> = (0..4).map(|_| None).collect();
        let mut asq_dot: Vec<Option<ScalarField>> = (0..4).map(|_| None).collect();
        for (off, c60) in FD6 {
            let c = c60 / (60.0 * h);
            let s = self.builder.amplitudes(t + off * h)?;
            for k in 0..4 {
                let a = &s.a[k];
                let asq = a.mul(a)?;
                a_dot[k] = Some(match a_dot[k].take() {
                    None => a.scaled(c),
                    Some(acc) => acc.add(&a.scaled(c)),
                });
                asq_dot[k] = Some(match asq_dot[k].take() {
                    None => asq.scaled(c),
                    Some(acc) => acc.add(&asq.scaled(c)),
                });
            }
        }
        Ok((
            a_dot.into_iter().map(|f| f.unwrap()).collect(),
            asq_dot.into_iter().map(|f| f.unwrap()).collect(),
        ))
    }

    /// 6th-order time derivatives ∂_t R_k of the primitive stresses.
    fn rk_rate(&self, t: f64) -> Result<Vec<SymTensorField>> {
        let h = self.fd_step;
        let mut out: Vec<Option<SymTensorField>> = (0..4).map(|_| None).collect();
        for (off, c60) in FD6 {
            let c = c60 / (60.0 * h);
            let s = self.builder.regularized(t + off * h)?;
            for k in 0..4 {
                let term = s.r_k[k].scaled(c);
                out[k] = Some(match out[k].take() {
                    None => term,
                    Some(acc) => acc.add(&term),
                });
            }
        }
        Ok(out.into_iter().map(|f| f.unwrap()).collect())
    }

    /// 6th-order central difference of a vector-valued time curve.
    fn fd6_vector(
        &self,
        t: f64,
        h: f64,
        f: impl Fn(f64) -> Result<VectorField>,
    ) -> Result<VectorField> {
        let mut out: Option<VectorField> = None;
        for (off, c60) in FD6 {
            let term = f(t + off * h)?.scaled(c60 / (60.0 * h));
            out = Some(match out {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(out.unwrap())
    }

    fn zeros_at(&self, t: f64) -> Result<(SymTensorField, ScalarField)> {
        let grid = self.builder.regularized(t)?.rho.grid();
        Ok((SymTensorField::zeros(grid), ScalarField::zeros(grid)))
    }

    /// R_osc,x = Σ_k g_k² B(∇(a_k²), (W_k∘Φ_k)⊗(W_k∘Φ_k) − ∮·) and the
    /// pressure p₁ = Δ⁻¹div Σ_k a_k² g_k² div((W_k∘Φ_k)⊗(W_k∘Φ_k)).
    pub fn osc_x(&self, t: f64) -> Result<(SymTensorField, ScalarField)> {
        let active = self.builder.active(t);
        if active.is_empty() {
            return self.zeros_at(t);
        }
        let amp = self.builder.amplitudes(t)?;
        let mut r_sum: Option<SymTensorField> = None;
        let mut v_sum: Option<VectorField> = None;
        for k in active {
            let g = self.builder.profiles.g(k, t);
            let (w, _, _) = self.builder.jet_comp(k, t)?;
            let tk = SymTensorField::outer_self(&w)?.zero_mean();
            let asq = amp.a[k].mul(&amp.a[k])?;
            let grad = asq.grad().scaled(g * g);
            let term = antidiv_b(&grad, &tk)?;
            r_sum = Some(match r_sum {
                None => term,
                Some(acc) => acc.add(&term),
            });
            let vterm = tk.div().mul_scalar(&asq)?.scaled(g * g);
            v_sum = Some(match v_sum {
                None => vterm,
                Some(acc) => acc.add(&vterm),
            });
        }
        let p1 = v_sum.unwrap().div().inv_laplacian();
        Ok((r_sum.unwrap(), p1))
    }

    /// Independent evaluation of E₁ = Σ g_k² ∇(a_k²)·(W⊗W − ∮W⊗W) +
    /// Q Σ a_k² g_k² div(W⊗W), via pointwise contraction and the Leray
    /// complement instead of the antidivergence operators.
    pub fn e1_reference(&self, t: f64) -> Result<VectorField> {
        let active = self.builder.active(t);
        let grid = self.builder.regularized(t)?.rho.grid();
        if active.is_empty() {
            return Ok(VectorField::zeros(grid));
        }
        let amp = self.builder.amplitudes(t)?;
        let mut e1: Option<VectorField> = None;
        let mut v_sum: Option<VectorField> = None;
        for k in active {
            let g = self.builder.profiles.g(k, t);
            let (w, _, _) = self.builder.jet_comp(k, t)?;
            let tk = SymTensorField::outer_self(&w)?.zero_mean();
            let asq = amp.a[k].mul(&amp.a[k])?;
            let contraction = tk.apply(&asq.grad())?.scaled(g * g);
            e1 = Some(match e1 {
                None => contraction,
                Some(acc) => acc.add(&contraction),
            });
            let vterm = tk.div().mul_scalar(&asq)?.scaled(g * g);
            v_sum = Some(match v_sum {
                None => vterm,
                Some(acc) => acc.add(&vterm),
            });
        }
        let q = v_sum.unwrap().leray().1;
        Ok(e1.unwrap().add(&q))
    }

    /// The vector Σ_k ∂_t(a_k² g_k) |W_k∘Φ_k|² e_k shared by R_osc,a, p₂ and
    /// E₂.
    fn osc_a_vector(&self, t: f64) -> Result<Option<VectorField>> {
        let active = self.active_closure(t);
        if active.is_empty() {
            return Ok(None);
        }
        let (_, asq_dot) = self.amp_rate(t)?;
        let amp = self.builder.amplitudes(t)?;
        let units = standard_units();
        let mut v: Option<VectorField> = None;
        for k in active {
            let g = self.builder.profiles.g(k, t);
            let gd = self.builder.profiles.g_deriv(k, t);
            let asq = amp.a[k].mul(&amp.a[k])?;
            // ∂_t(a² g) = (∂_t a²) g + a² g′
            let d = asq_dot[k].scaled(g).add(&asq.scaled(gd));
            let (w, _, _) = self.builder.jet_comp(k, t)?;
            let s = d.mul(&w.dot(&w)?)?;
            let e = units[k];
            let term = VectorField::from_comps(s.scaled(e[0]), s.scaled(e[1]));
            v = Some(match v {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(v)
    }

    /// R_osc,a = −ω⁻¹σ R(Σ_k ∂_t(a_k²g_k)|W_k∘Φ_k|² e_k) and p₂.
    pub fn osc_a(&self, t: f64) -> Result<(SymTensorField, ScalarField)> {
        let Some(v) = self.osc_a_vector(t)? else {
            return self.zeros_at(t);
        };
        let c = self.sigma() / self.builder.profiles.omega();
        let r = antidiv_r(&v.zero_mean()).scaled(-c);
        let p2 = v.div().inv_laplacian().scaled(c);
        Ok((r, p2))
    }

    /// E₂ = −ω⁻¹σ P Σ_k ∂_t(a_k²g_k)|W_k∘Φ_k|² e_k via the Leray projection.
    pub fn e2_reference(&self, t: f64) -> Result<VectorField> {
        let Some(v) = self.osc_a_vector(t)? else {
            return Ok(VectorField::zeros(self.builder.regularized(t)?.rho.grid()));
        };
        let c = self.sigma() / self.builder.profiles.omega();
        Ok(v.leray_p().scaled(-c))
    }

    /// R_osc,t = −σ⁻¹ R(Σ_k [(θ²)′ h_k div R_k + θ² h_k div ∂_tR_k]) and p₃,
    /// which also absorbs the gradient part of θ²Σ(g_k²−1)div R_k.
    pub fn osc_t(&self, t: f64) -> Result<(SymTensorField, ScalarField)> {
        let reg = self.builder.regularized(t)?;
        let theta = reg.theta;
        let theta_d = self.builder.cutoff.theta_deriv(t);
        if theta == 0.0 && theta_d == 0.0 {
            return self.zeros_at(t);
        }
        let rk_dot = self.rk_rate(t)?;
        let mut v: Option<VectorField> = None;
        let mut z: Option<VectorField> = None;
        for k in 0..4 {
            let h = self.builder.profiles.h(k, t);
            let g = self.builder.profiles.g(k, t);
            let dk = reg.r_k[k].div();
            let term = dk
                .scaled(2.0 * theta * theta_d * h)
                .add(&rk_dot[k].div().scaled(theta * theta * h));
            v = Some(match v {
                None => term,
                Some(acc) => acc.add(&term),
            });
            let zterm = dk.scaled(theta * theta * (g * g - 1.0));
            z = Some(match z {
                None => zterm,
                Some(acc) => acc.add(&zterm),
            });
        }
        let v = v.unwrap();
        let z = z.unwrap();
        let sigma = self.sigma();
        let r = antidiv_r(&v).scaled(-1.0 / sigma);
        let p3 = v
            .div()
            .inv_laplacian()
            .scaled(1.0 / sigma)
            .add(&z.div().inv_laplacian());
        Ok((r, p3))
    }

    /// E₃ = ∂_t w_o + θ² Σ_k (g_k² − 1) div R_k, with ∂_t w_o by central
    /// differences of the compensator itself.
    pub fn e3_reference(&self, t: f64) -> Result<VectorField> {
        let dtw_o = self.fd6_vector(t, self.fd_step, |s| self.builder.w_o(s))?;
        let reg = self.builder.regularized(t)?;
        let theta = reg.theta;
        let mut z: Option<VectorField> = None;
        for k in 0..4 {
            let g = self.builder.profiles.g(k, t);
            let term = reg.r_k[k].div().scaled(theta * theta * (g * g - 1.0));
            z = Some(match z {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(dtw_o.add(&z.unwrap()))
    }

    /// R_rem = (1−θ²)R (exact) and p₄ = θ²ρ, stored mean-free.
    pub fn rem(&self, t: f64) -> Result<(SymTensorField, ScalarField)> {
        let reg = self.builder.regularized(t)?;
        let theta = reg.theta;
        let r_rem = reg.r.scaled(1.0 - theta * theta);
        let p4 = reg.rho.scaled(theta * theta).zero_mean();
        Ok((r_rem, p4))
    }

    /// R_cor = R(div[(w_c+w_t)⊗w + w_p⊗(w_c+w_t)]).
    pub fn cor(&self, t: f64) -> Result<SymTensorField> {
        let wp = self.builder.w_p(t)?;
        let stream = self.builder.stream(t)?;
        let wc = stream.sub(&wp);
        let wt = self.builder.w_o(t)?.add(&self.builder.w_a(t)?);
        let w = stream.add(&wt);
        let ct = wc.add(&wt);
        let v = div_outer(&ct, &w)?.add(&div_outer(&wp, &ct)?);
        Ok(antidiv_r(&v))
    }

    /// ∂_t(w_p + w_c) in stream form:
    /// σ⁻¹ Σ_k ∇⊥[∂_t(a_k g_k)(Ψ_k∘Φ_k) + ω σ⁻¹ a_k g_k² (e_k·∇)(Ψ_k∘Φ_k)].
    pub fn dt_principal(&self, t: f64) -> Result<VectorField> {
        let active = self.active_closure(t);
        let grid = self.builder.regularized(t)?.rho.grid();
        if active.is_empty() {
            return Ok(VectorField::zeros(grid));
        }
        let (a_dot, _) = self.amp_rate(t)?;
        let amp = self.builder.amplitudes(t)?;
        let units = standard_units();
        let sigma = self.sigma();
        let omega = self.builder.profiles.omega();
        let mut s: Option<ScalarField> = None;
        for k in active {
            let g = self.builder.profiles.g(k, t);
            let gd = self.builder.profiles.g_deriv(k, t);
            let (_, _, psi) = self.builder.jet_comp(k, t)?;
            let d1 = a_dot[k].scaled(g).add(&amp.a[k].scaled(gd));
            let e = units[k];
            let edpsi = psi.dx().scaled(e[0]).add(&psi.dy().scaled(e[1]));
            let term = psi
                .mul(&d1)?
                .add(&edpsi.mul(&amp.a[k])?.scaled(g * g * omega / sigma));
            s = Some(match s {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(s.unwrap().grad_perp().scaled(1.0 / sigma))
    }

    /// Linear error parts: R_Lap = −R(Δw), R_Acc = R(∂_t(w_p+w_c)),
    /// R_Dri = R(div(u⊗w) + div(w⊗u)).
    pub fn lin(&self, t: f64) -> Result<LinearParts> {
        let w = self.builder.w_total(t)?;
        let u = self.velocity.velocity_at(t)?;
        let lap = antidiv_r(&w.laplacian()).scaled(-1.0);
        let acc = antidiv_r(&self.dt_principal(t)?);
        let dri = antidiv_r(&div_outer(&u, &w)?.add(&div_outer(&w, &u)?));
        Ok(LinearParts { lap, acc, dri })
    }

    /// Assemble every component of the decomposition at time t.
    pub fn slice(&self, t: f64) -> Result<StressSlice> {
        let theta = self.builder.regularized(t)?.theta;
        let (osc_x, p1) = self.osc_x(t)?;
        let (osc_a, p2) = self.osc_a(t)?;
        let (osc_t, p3) = self.osc_t(t)?;
        let (rem, p4) = self.rem(t)?;
        let cor = self.cor(t)?;
        let lin = self.lin(t)?;
        Ok(StressSlice { t, theta, osc_x, p1, osc_a, p2, osc_t, p3, rem, p4, cor, lin })
    }

    /// Baseline pressure p₀ with ∂_t u − Δu + div(u⊗u) + ∇p₀ = div R up to a
    /// divergence-free defect: p₀ = Δ⁻¹div(div R + Δu − ∂_t u − div(u⊗u)).
    pub fn baseline_pressure(
        u: &VectorField,
        dtu: &VectorField,
        r: &SymTensorField,
    ) -> Result<ScalarField> {
        let v = r
            .div()
            .add(&u.laplacian())
            .sub(dtu)
            .sub(&div_outer(u, u)?);
        Ok(v.div().inv_laplacian())
    }

    /// Relative residual of the baseline pair (u, R) at time t.
    pub fn baseline_residual(&self, t: f64) -> Result<f64> {
        let u = self.velocity.velocity_at(t)?;
        let dtu = self.velocity.velocity_dt(t)?;
        let r = self.builder.stress.stress_at(t)?;
        let p0 = Self::baseline_pressure(&u, &dtu, &r)?;
        let uu = div_outer(&u, &u)?;
        let res = dtu
            .sub(&u.laplacian())
            .add(&uu)
            .add(&p0.grad())
            .sub(&r.div());
        let scale = dtu
            .l2_norm()
            .max(u.laplacian().l2_norm())
            .max(uu.l2_norm())
            .max(r.div().l2_norm());
        if scale == 0.0 {
            return Ok(res.l2_norm());
        }
        Ok(res.l2_norm() / scale)
    }

    /// Verify ∂_t u₁ − Δu₁ + div(u₁⊗u₁) + ∇p₁ = div R₁ over the given time
    /// slices, with ∂_t w by 6th-order central differences.  Aborts if the
    /// baseline pair fails its own residual check.
    pub fn verify_nsr(&self, times: &[f64], baseline_tol: f64) -> Result<NsrResidual> {
        let mut baseline_max: f64 = 0.0;
        let mut per_slice = Vec::with_capacity(times.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for &t in times {
            let base = self.baseline_residual(t)?;
            if base > baseline_tol {
                return Err(EngineError::Verification(format!(
                    "baseline pair fails its own residual check at t = {t}: \
                     relative residual {base:.3e} > {baseline_tol:.1e}"
                )));
            }
            baseline_max = baseline_max.max(base);

            let u = self.velocity.velocity_at(t)?;
            let dtu = self.velocity.velocity_dt(t)?;
            let r = self.builder.stress.stress_at(t)?;
            let p0 = Self::baseline_pressure(&u, &dtu, &r)?;

            let w = self.builder.w_total(t)?;
            let dtw = self.fd6_vector(t, self.fd_fast, |s| self.builder.w_total(s))?;
            let sl = self.slice(t)?;
            let r1 = sl.r1();
            let p1 = p0.add(&sl.p_total());

            let u1 = u.add(&w);
            let dtu1 = dtu.add(&dtw);
            let lap = u1.laplacian();
            let adv = div_outer(&u1, &u1)?;
            let gradp = p1.grad();
            let divr = r1.div();
            let res = dtu1.sub(&lap).add(&adv).add(&gradp).sub(&divr);
            let scale = dtu1
                .l2_norm()
                .max(lap.l2_norm())
                .max(adv.l2_norm())
                .max(gradp.l2_norm())
                .max(divr.l2_norm())
                .max(1e-300);
            let rel = res.l2_norm() / scale;
            per_slice.push((t, rel));
            num += res.l2_norm().powi(2);
            den += scale.powi(2);
        }
        Ok(NsrResidual {
            baseline: baseline_max,
            per_slice,
            aggregate: (num / den.max(1e-300)).sqrt(),
        })
    }

    /// Space-time norm report over the given slices (trapezoid in time).
    pub fn report(
        &self,
        times: &[f64],
        r_exponent: f64,
        p_exponent: f64,
        residual: Option<NsrResidual>,
    ) -> Result<StressReport> {
        if times.is_empty() {
            return Err(EngineError::InvalidParam("empty time grid for report".into()));
        }
        let mut sorted = times.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let weights = trapezoid_weights(&sorted);
        let mut names: Vec<String> = Vec::new();
        let mut slices = Vec::with_capacity(sorted.len());
        let mut l1: Vec<f64> = Vec::new();
        let mut linf: Vec<f64> = Vec::new();
        let mut l2sq: Vec<f64> = Vec::new();
        for (i, &t) in sorted.iter().enumerate() {
            let sl = self.slice(t)?;
            let comps = sl.components();
            if names.is_empty() {
                names = comps.iter().map(|(n, _)| n.to_string()).collect();
                l1 = vec![0.0; names.len()];
                linf = vec![0.0; names.len()];
                l2sq = vec![0.0; names.len()];
            }
            let mut lr_row = Vec::with_capacity(names.len());
            let mut lp_row = Vec::with_capacity(names.len());
            let mut l2_row = Vec::with_capacity(names.len());
            for (j, (_, f)) in comps.iter().enumerate() {
                let lr = f.lp_norm(r_exponent);
                let lp = f.lp_norm(p_exponent);
                let l2 = f.frobenius_l2();
                l1[j] += weights[i] * lr;
                linf[j] = linf[j].max(lp);
                l2sq[j] += weights[i] * l2 * l2;
                lr_row.push(lr);
                lp_row.push(lp);
                l2_row.push(l2);
            }
            slices.push(SliceNorms { t, lr: lr_row, lp: lp_row, l2: l2_row });
        }
        let mut components = BTreeMap::new();
        for (j, name) in names.iter().enumerate() {
            components.insert(
                name.clone(),
                ComponentNorms { l1_lr: l1[j], linf_lp: linf[j], l2_l2: l2sq[j].sqrt() },
            );
        }
        Ok(StressReport {
            schema_version: 1,
            r_exponent,
            p_exponent,
            component_names: names,
            components,
            slices,
            nsr_residual: residual,
        })
    }
}

/// Trapezoid quadrature weights for sorted nodes.
fn trapezoid_weights(ts: &[f64]) -> Vec<f64> {
    let n = ts.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i == 0 { ts[0] } else { ts[i - 1] };
            let right = if i == n - 1 { ts[n - 1] } else { ts[i + 1] };
            0.5 * (right - left)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::TimeCutoff;
    use crate::field::random_sym_traceless;
    use crate::grid::Grid;
    use crate::jets::{build_jets, JetFamily, JetParams};
    use crate::perturbation::{ModulatedStress, StaticStress, StressTrajectory};
    use crate::temporal::{build_temporal, standard_offsets, TemporalParams, TemporalProfiles};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    struct Fixture {
        jets: JetFamily,
        profiles: TemporalProfiles,
        cutoff: TimeCutoff,
        stress: Box<dyn StressTrajectory>,
        velocity_grid: Grid,
    }

    fn base_tensor() -> SymTensorField {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = random_sym_traceless(Grid::new(64, 4).unwrap(), 4, &mut rng);
        raw.scaled(0.5 / raw.linf_norm())
    }

    impl Fixture {
        fn with_stress(stress: Box<dyn StressTrajectory>) -> Self {
            let grid = Grid::new(256, 4).unwrap();
            let jets = build_jets(JetParams::standard(grid, 8.0, 16.0)).unwrap();
            let profiles = build_temporal(TemporalParams {
                kappa: 8.0,
                sigma: 1,
                omega: 16.0,
                offsets: standard_offsets(4),
            })
            .unwrap();
            let cutoff = TimeCutoff::new((0.0, 1.0), 8.0).unwrap();
            Self { jets, profiles, cutoff, stress, velocity_grid: grid }
        }

        fn smoke() -> Self {
            Self::with_stress(Box::new(StaticStress(base_tensor())))
        }

        fn modulated() -> Self {
            Self::with_stress(Box::new(ModulatedStress {
                base: base_tensor(),
                modulation: Arc::new(|t: f64| 1.0 + 0.3 * (TWO_PI * t).sin()),
            }))
        }

        fn builder(&self) -> PerturbationBuilder<'_> {
            PerturbationBuilder::new(&self.jets, &self.profiles, self.cutoff, &*self.stress, 48)
                .unwrap()
        }
    }

    fn burst_time(profiles: &TemporalProfiles, k: usize) -> f64 {
        let (a, b) = profiles.g_support(k).components()[0];
        0.5 * (a + b)
    }

    #[test]
    fn osc_x_identity_against_independent_e1() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 0);
        let (r, p1) = asm.osc_x(t).unwrap();
        let e1 = asm.e1_reference(t).unwrap();
        let lhs = r.div().add(&p1.grad());
        let defect = lhs.sub(&e1).l2_norm() / e1.l2_norm();
        assert!(defect <= 1e-8, "E₁ defect {defect}");
        assert!(r.traceless_defect() <= 1e-10);
        assert!(p1.mean().abs() <= 1e-13);
    }

    #[test]
    fn oscillation_parts_vanish_between_bursts() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-4, 1e-7).unwrap();
        // t = 0.06 sits in the gap between the two lobes of burst 0 and
        // before every other window
        let t = 0.06;
        assert!(b.active(t).is_empty());
        assert!(asm.active_closure(t).is_empty());
        let (rx, p1) = asm.osc_x(t).unwrap();
        let (ra, p2) = asm.osc_a(t).unwrap();
        assert_eq!(rx.frobenius_l2(), 0.0);
        assert_eq!(ra.frobenius_l2(), 0.0);
        assert_eq!(p1.l2_norm(), 0.0);
        assert_eq!(p2.l2_norm(), 0.0);
    }

    #[test]
    fn osc_a_identity_against_leray_reference() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 1);
        let (r, p2) = asm.osc_a(t).unwrap();
        let e2 = asm.e2_reference(t).unwrap();
        let lhs = r.div().add(&p2.grad());
        let defect = lhs.sub(&e2).l2_norm() / e2.l2_norm();
        assert!(defect <= 1e-10, "E₂ defect {defect}");
        assert!(r.traceless_defect() <= 1e-10);
    }

    #[test]
    fn osc_a_cancellation_is_second_order_in_time_step() {
        // ∂_t w_a + P Σ a²g² div(W∘Φ ⊗ W∘Φ) = E₂; with a 2nd-order FD for
        // ∂_t w_a the residual must shrink ~4× when h halves.
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        // quarter point of the first lobe, where g and g′ are both sizable
        let (lo, hi) = fx.profiles.g_support(2).components()[0];
        let t = lo + 0.25 * (hi - lo);
        let e2 = asm.e2_reference(t).unwrap();
        // P Σ a²g² div((W∘Φ)⊗(W∘Φ))
        let amp = b.amplitudes(t).unwrap();
        let mut v: Option<VectorField> = None;
        for k in b.active(t) {
            let g = fx.profiles.g(k, t);
            let (w, _, _) = b.jet_comp(k, t).unwrap();
            let ww = SymTensorField::outer_self(&w).unwrap();
            let asq = amp.a[k].mul(&amp.a[k]).unwrap();
            let term = ww.div().mul_scalar(&asq).unwrap().scaled(g * g);
            v = Some(match v {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        let pterm = v.unwrap().leray_p();
        // scale against the transport mechanism itself, which is O(1) even
        // where E₂ happens to be small
        let scale = pterm.l2_norm().max(e2.l2_norm());
        let res_at = |h: f64| {
            let dtw_a = b
                .w_a(t + h)
                .unwrap()
                .sub(&b.w_a(t - h).unwrap())
                .scaled(0.5 / h);
            dtw_a.add(&pterm).sub(&e2).l2_norm() / scale
        };
        // the composed fields carry a fast phase, so the steps must be tiny
        let r1 = res_at(4e-6);
        let r2 = res_at(2e-6);
        assert!(r1 / r2 >= 3.5, "no O(h²) decay: {r1} → {r2}");
        assert!(r2 <= 1e-3, "cancellation residual too large: {r2}");
    }

    #[test]
    fn osc_t_vanishes_for_static_stress_on_theta_plateau() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 0); // θ ≡ 1 there, θ′ = 0
        let (r, p3) = asm.osc_t(t).unwrap();
        assert!(r.frobenius_l2() <= 1e-9, "R_osc,t = {}", r.frobenius_l2());
        // p₃ is NOT zero here: it still absorbs the gradient part of
        // z = θ²Σ(g_k²−1)div R_k.  Check it against the Leray complement.
        let reg = b.regularized(t).unwrap();
        let mut z: Option<VectorField> = None;
        for k in 0..4 {
            let g = fx.profiles.g(k, t);
            let term = reg.r_k[k].div().scaled(g * g - 1.0);
            z = Some(match z {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        let qz = z.unwrap().leray().1;
        let defect = p3.grad().sub(&qz).l2_norm() / qz.l2_norm();
        assert!(defect <= 1e-6, "∇p₃ vs Q(z) defect {defect}");
    }

    #[test]
    fn osc_t_identity_for_time_dependent_stress() {
        let fx = Fixture::modulated();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 3);
        let (r, p3) = asm.osc_t(t).unwrap();
        assert!(r.frobenius_l2() > 0.0);
        let e3 = asm.e3_reference(t).unwrap();
        let lhs = r.div().add(&p3.grad());
        let defect = lhs.sub(&e3).l2_norm() / e3.l2_norm();
        assert!(defect <= 1e-6, "E₃ defect {defect}");
    }

    #[test]
    fn rem_is_exact_and_trivial_on_plateau() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        // θ = 1 in the interior → R_rem = 0
        let (r_mid, _) = asm.rem(0.5).unwrap();
        assert_eq!(r_mid.frobenius_l2(), 0.0);
        // θ = 0 at the edge → R_rem = R
        let t_edge = 0.004;
        assert_eq!(fx.cutoff.theta(t_edge), 0.0);
        let (r_edge, p4) = asm.rem(t_edge).unwrap();
        let r_in = fx.stress.stress_at(t_edge).unwrap();
        assert_eq!(r_edge.sub(&r_in).frobenius_l2(), 0.0);
        assert_eq!(p4.l2_norm(), 0.0); // θ²ρ = 0, mean-free storage
        // mid-ramp: p₄ recovers θ²ρ up to its mean
        let t_ramp = 0.022;
        let theta = fx.cutoff.theta(t_ramp);
        assert!(theta > 0.0 && theta < 1.0);
        let (_, p4r) = asm.rem(t_ramp).unwrap();
        let reg = b.regularized(t_ramp).unwrap();
        let expect = reg.rho.scaled(theta * theta).zero_mean();
        assert!(p4r.sub(&expect).l2_norm() <= 1e-13 * expect.l2_norm());
    }

    #[test]
    fn cor_divergence_identity() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 1);
        let cor = asm.cor(t).unwrap();
        assert!(cor.frobenius_l2() > 0.0);
        // independent tensor rebuild
        let wp = b.w_p(t).unwrap();
        let wc = b.w_c(t).unwrap();
        let wt = b.w_o(t).unwrap().add(&b.w_a(t).unwrap());
        let w = b.w_total(t).unwrap();
        let ct = wc.add(&wt);
        let v = div_outer(&ct, &w).unwrap().add(&div_outer(&wp, &ct).unwrap());
        let defect = cor.div().sub(&v).l2_norm() / v.l2_norm();
        assert!(defect <= 1e-10, "R_cor defect {defect}");
        assert!(cor.traceless_defect() <= 1e-10);
    }

    #[test]
    fn lin_lap_is_negative_symmetric_gradient() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 2);
        let lin = asm.lin(t).unwrap();
        // −R(Δw) = −(∇w + ∇wᵀ) for div-free zero-mean w
        let w = b.w_total(t).unwrap();
        let expect = SymTensorField::from_comps(
            w.x().dx().scaled(2.0),
            w.y().dx().add(&w.x().dy()),
            w.y().dy().scaled(2.0),
        )
        .scaled(-1.0);
        let defect = lin.lap.sub(&expect).frobenius_l2() / expect.frobenius_l2();
        assert!(defect <= 1e-10, "R_Lap sign/identity defect {defect}");
        // resting background → no drift part
        assert_eq!(lin.dri.frobenius_l2(), 0.0);
        assert!(lin.acc.frobenius_l2() > 0.0);
    }

    #[test]
    fn acceleration_matches_fd_of_principal_parts() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        // a burst well inside the θ ≡ 1 plateau, so the slow amplitude
        // stencil never crosses the cutoff's C² junction
        let t = burst_time(&fx.profiles, 1);
        let analytic = asm.dt_principal(t).unwrap();
        let fd = asm.fd6_vector(t, asm.fd_fast, |s| b.stream(s)).unwrap();
        let defect = analytic.sub(&fd).l2_norm() / fd.l2_norm();
        assert!(defect <= 1e-6, "∂_t(w_p+w_c) defect {defect}");
    }

    #[test]
    fn decomposition_completeness() {
        // div(R_osc) + ∇(p₁+p₂+p₃+p₄) = ∂_t w_t + div(w_p ⊗ w_p + R)
        let fx = Fixture::modulated();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 1);
        let sl = asm.slice(t).unwrap();
        let lhs = sl
            .osc_x
            .add(&sl.osc_t)
            .add(&sl.osc_a)
            .add(&sl.rem)
            .div()
            .add(&sl.p1.add(&sl.p2).add(&sl.p3).add(&sl.p4).grad());
        let dtw_t = asm
            .fd6_vector(t, asm.fd_fast, |s| Ok(b.w_o(s)?.add(&b.w_a(s)?)))
            .unwrap();
        let wp = b.w_p(t).unwrap();
        let r = fx.stress.stress_at(t).unwrap();
        let rhs = dtw_t.add(&div_outer(&wp, &wp).unwrap()).add(&r.div());
        let defect = lhs.sub(&rhs).l2_norm() / rhs.l2_norm();
        assert!(defect <= 1e-5, "completeness defect {defect}");
    }

    // ---- manufactured heat-flow baseline ------------------------------

    /// u(t) = e^{tΔ}u₀, so ∂_t u = Δu and R = u ∘⊗ u with p₀ = −|u|²/2.
    struct HeatFlow {
        u0: VectorField,
    }

    impl HeatFlow {
        fn at(&self, t: f64) -> VectorField {
            let mult = |f: &ScalarField| {
                f.spectral_multiplier(|m1, m2| {
                    (-TWO_PI * TWO_PI * ((m1 * m1 + m2 * m2) as f64) * t).exp()
                })
            };
            VectorField::from_comps(mult(self.u0.x()), mult(self.u0.y()))
        }
    }

    impl VelocityTrajectory for HeatFlow {
        fn velocity_at(&self, t: f64) -> Result<VectorField> {
            Ok(self.at(t))
        }
        fn velocity_dt(&self, t: f64) -> Result<VectorField> {
            Ok(self.at(t).laplacian())
        }
    }

    /// Traceless interaction u ∘⊗ u = u⊗u − ½|u|² Id.
    fn interaction(u: &VectorField) -> SymTensorField {
        let outer = SymTensorField::outer_self(u).unwrap();
        let half = u.dot(u).unwrap().scaled(0.5);
        outer.sub(&SymTensorField::from_comps(
            half.clone(),
            ScalarField::zeros(half.grid()),
            half.clone(),
        ))
    }

    struct HeatStress {
        flow: HeatFlow,
    }

    impl StressTrajectory for HeatStress {
        fn stress_at(&self, t: f64) -> Result<SymTensorField> {
            Ok(interaction(&self.flow.at(t)))
        }
    }

    fn heat_initial(grid: Grid) -> VectorField {
        // a few low modes, scaled so |u∘⊗u|∞ stays well inside the χ = 2
        // zone; the explicit truncation just tightens the declared bandwidth
        let psi = ScalarField::from_fn(grid, |x, y| {
            0.06 * (TWO_PI * x).sin() * (TWO_PI * y).cos() + 0.025 * (2.0 * TWO_PI * y).sin()
        });
        psi.truncated(2).0.grad_perp()
    }

    #[test]
    fn manufactured_heat_flow_baseline_is_exact() {
        let grid = Grid::new(64, 2).unwrap();
        // single-mode u = ∇⊥ sin(2πx₁) e^{−4π²t} with R = 0: the advection
        // term is a pure gradient, so the residual vanishes with p₀ = −|u|²/2
        let u0 = ScalarField::from_fn(grid, |x, _| (TWO_PI * x).sin()).grad_perp();
        let flow = HeatFlow { u0 };
        for &t in &[0.0, 0.1, 0.37] {
            let u = flow.velocity_at(t).unwrap();
            let dtu = flow.velocity_dt(t).unwrap();
            let r = SymTensorField::zeros(grid);
            let p0 = StressAssembler::baseline_pressure(&u, &dtu, &r).unwrap();
            let res = dtu
                .sub(&u.laplacian())
                .add(&div_outer(&u, &u).unwrap())
                .add(&p0.grad())
                .sub(&r.div());
            assert!(res.l2_norm() <= 1e-10 * u.l2_norm(), "t={t}");
        }
    }

    #[test]
    fn verify_nsr_full_construction() {
        let grid = Grid::new(256, 4).unwrap();
        let flow = HeatFlow { u0: heat_initial(Grid::new(64, 2).unwrap()) };
        let stress = HeatStress { flow: HeatFlow { u0: heat_initial(Grid::new(64, 2).unwrap()) } };
        let jets = build_jets(JetParams::standard(grid, 8.0, 16.0)).unwrap();
        let profiles = build_temporal(TemporalParams {
            kappa: 8.0,
            sigma: 1,
            omega: 16.0,
            offsets: standard_offsets(4),
        })
        .unwrap();
        let r0 = stress.stress_at(0.0).unwrap();
        let cutoff = TimeCutoff::new((0.0, 1.0), r0.linf_norm().max(1.0)).unwrap();
        let b = PerturbationBuilder::new(&jets, &profiles, cutoff, &stress, 48).unwrap();
        let asm = StressAssembler::new(&b, &flow, 1e-3, 1e-7).unwrap();
        // two active times on the θ = 1 plateau plus one quiet time
        let t_mid = burst_time(&profiles, 2);
        let (lo, hi) = profiles.g_support(1).components()[0];
        let t_quarter = lo + 0.25 * (hi - lo);
        let times = [t_quarter, t_mid, 0.45];
        let res = asm.verify_nsr(&times, 1e-8).unwrap();
        assert!(res.baseline <= 1e-10, "baseline {:?}", res.baseline);
        assert!(res.aggregate <= 1e-5, "aggregate residual {}", res.aggregate);
        for (t, r) in &res.per_slice {
            assert!(*r <= 1e-5, "slice t={t} residual {r}");
        }
    }

    #[test]
    fn report_norms_and_csv_shape() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let zero = ZeroVelocity(fx.velocity_grid);
        let asm = StressAssembler::new(&b, &zero, 1e-3, 1e-6).unwrap();
        let t = burst_time(&fx.profiles, 0);
        let report = asm.report(&[t, 0.3], 1.2, 3.0, None).unwrap();
        assert_eq!(report.component_names.len(), 9);
        assert_eq!(report.slices.len(), 2);
        let total = &report.components["total"];
        assert!(total.l1_lr > 0.0 && total.linf_lp > 0.0 && total.l2_l2 > 0.0);
        let json = report.to_json().unwrap();
        assert!(json.contains("\"schema_version\": 1"));
        let csv = report.csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("t,osc_x_lr"));
    }
}
