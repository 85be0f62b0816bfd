//! Geometric decomposition of symmetric matrices near the identity, the
//! stress regularizer ρ = χ(R), the primitive stresses R_k, the time cutoff
//! θ, and the amplitude coefficient fields a_k = θ ρ^{1/2} Γ_k(Id − R/ρ).
//!
//! The squared amplitudes are affine in the matrix entries over the fixed
//! four-direction set Λ = {(1,0),(0,1),(1,1),(1,−1)}:
//!
//!   Γ²_{(1,0)} = r₁₁ − 1/2,   Γ²_{(0,1)}  = r₂₂ − 1/2,
//!   Γ²_{(1,1)} = r₁₂ + 1/2,   Γ²_{(1,−1)} = −r₁₂ + 1/2,
//!
//! which reconstruct R = Σ Γ²_k e_k ⊗ e_k exactly for every symmetric R, and
//! are nonnegative whenever every entry of R − Id is ≤ 1/2 in magnitude — a
//! strictly larger set than the operator-norm ball B_{1/2}(Id).
//!
//! A genuine subtlety of the χ transition band: any smooth monotone χ with
//! χ = 2 on [0,1] has χ(1+ε) = 2 + o(ε) < 2(1+ε), so |R|/χ(|R|) exceeds 1/2
//! slightly for |R| just above 1 and the squared amplitudes can dip below
//! zero there.  We clamp dips within `AMPLITUDE_FLOOR` and reject anything
//! worse; well-posed runs keep the stress magnitude below 1 (where ρ ≡ 2
//! exactly) or the entries comfortably inside the ball.

use ndarray::Array2;

use crate::bump::smoothstep;
use crate::error::{EngineError, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::grid::next_pow2;
use crate::jets::standard_directions;
use crate::tol::{AMPLITUDE_FLOOR, TOL_IDENTITY};

/// Unit vectors e_k = k/|k| for the standard direction set.
pub fn standard_units() -> Vec<[f64; 2]> {
    standard_directions()
        .iter()
        .map(|k| {
            let l = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            [k[0] as f64 / l, k[1] as f64 / l]
        })
        .collect()
}

/// Operator norm of the symmetric matrix [[xx, xy], [xy, yy]] via the
/// closed-form eigenvalues (t/2 ± √((xx−yy)²/4 + xy²)).
pub fn opnorm_sym(xx: f64, xy: f64, yy: f64) -> f64 {
    let half_tr = 0.5 * (xx + yy);
    let disc = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
    (half_tr + disc).abs().max((half_tr - disc).abs())
}

/// Raw affine squared amplitudes of the matrix [[r11, r12], [r12, r22]],
/// in the Λ order (1,0), (0,1), (1,1), (1,−1).  Defined for every symmetric
/// matrix; nonnegativity is the caller's concern.
pub fn gamma_sq(r11: f64, r12: f64, r22: f64) -> [f64; 4] {
    [r11 - 0.5, r22 - 0.5, r12 + 0.5, -r12 + 0.5]
}

/// Reconstruction Σ Γ²_k e_k ⊗ e_k as (xx, xy, yy) — exact matrix algebra,
/// used by the property tests.
pub fn gamma_reconstruct(g: &[f64; 4]) -> [f64; 3] {
    // e⊗e for the axes are diag(1,0), diag(0,1); for the diagonals
    // [[1/2, ±1/2], [±1/2, 1/2]].
    [
        g[0] + 0.5 * (g[2] + g[3]),
        0.5 * (g[2] - g[3]),
        g[1] + 0.5 * (g[2] + g[3]),
    ]
}

/// Geometric decomposition with the operator-norm ball precondition: rejects
/// matrices outside B_{1/2}(Id) and negative coefficients beyond −1e−12;
/// tiny negative dust is clamped to zero.
pub fn gamma_decompose(r11: f64, r12: f64, r22: f64) -> Result<[f64; 4]> {
    let dist = opnorm_sym(r11 - 1.0, r12, r22 - 1.0);
    if dist > 0.5 + TOL_IDENTITY {
        return Err(EngineError::Precondition(format!(
            "matrix at operator-norm distance {dist} > 1/2 from Id"
        )));
    }
    let mut g = gamma_sq(r11, r12, r22);
    for v in &mut g {
        if *v < -TOL_IDENTITY {
            return Err(EngineError::Precondition(format!(
                "negative squared amplitude {v} inside the ball"
            )));
        }
        *v = v.max(0.0);
    }
    Ok(g)
}

/// The matrix cutoff χ: 2 on [0,1], 2s on [2,∞), monotone C¹ quintic
/// interpolant in between.
pub fn chi(s: f64) -> f64 {
    let s = s.abs();
    if s <= 1.0 {
        2.0
    } else if s >= 2.0 {
        2.0 * s
    } else {
        // p(u) = 2 + 12u³ − 16u⁴ + 6u⁵ on u = s − 1 ∈ (0,1):
        // p(0)=2, p′(0)=0, p(1)=4, p′(1)=2, p′ = u²(30u² − 64u + 36) > 0.
        let u = s - 1.0;
        2.0 + u * u * u * (12.0 + u * (-16.0 + 6.0 * u))
    }
}

/// Smooth time cutoff θ for a working interval I = (t0, t1): 0 where
/// dist(t, I^c) ≤ 1/(8‖R‖∞) and 1 where dist(t, I^c) ≥ 1/(4‖R‖∞).
#[derive(Debug, Clone, Copy)]
pub struct TimeCutoff {
    pub interval: (f64, f64),
    /// Zero threshold d₀ = 1/(8‖R‖∞).
    pub d0: f64,
    /// One threshold d₁ = 1/(4‖R‖∞).
    pub d1: f64,
}

impl TimeCutoff {
    pub fn new(interval: (f64, f64), r_sup: f64) -> Result<Self> {
        if !(interval.1 > interval.0) {
            return Err(EngineError::InvalidParam(format!(
                "empty working interval ({}, {})",
                interval.0, interval.1
            )));
        }
        if !(r_sup > 0.0) || !r_sup.is_finite() {
            return Err(EngineError::InvalidParam(format!(
                "stress sup norm must be positive and finite, got {r_sup}"
            )));
        }
        Ok(Self { interval, d0: 1.0 / (8.0 * r_sup), d1: 1.0 / (4.0 * r_sup) })
    }

    /// θ(t), built from the master smoothstep.
    pub fn theta(&self, t: f64) -> f64 {
        let depth = if t <= self.interval.0 || t >= self.interval.1 {
            0.0
        } else {
            (t - self.interval.0).min(self.interval.1 - t)
        };
        smoothstep((depth - self.d0) / (self.d1 - self.d0))
    }

    /// Analytic θ′(t) by centered differences of the smooth evaluator (θ is
    /// a table-backed smoothstep, so a small-step FD is accurate to ~1e−9).
    pub fn theta_deriv(&self, t: f64) -> f64 {
        let h = 1e-6 * (self.d1 - self.d0).min(1.0);
        (self.theta(t + h) - self.theta(t - h)) / (2.0 * h)
    }
}

/// One time slice of the regularized stress.
#[derive(Debug, Clone)]
pub struct RegularizedSlice {
    /// θ(t) at this slice.
    pub theta: f64,
    /// ρ = χ(R), band-limited at the amplitude bandwidth.
    pub rho: ScalarField,
    /// The input stress slice.
    pub r: SymTensorField,
    /// Primitive stresses R_k = ρ Γ_k²(Id − R/ρ) e_k ⊗ e_k, in Λ order.
    pub r_k: Vec<SymTensorField>,
    /// Relative spectral tail removed when band-limiting ρ.
    pub rho_tail: f64,
    /// Smallest sampled squared amplitude (diagnostic for the χ band).
    pub min_gamma_sq: f64,
}

/// One time slice of the amplitude set.
#[derive(Debug, Clone)]
pub struct AmplitudeSlice {
    pub theta: f64,
    /// a_k = θ ρ^{1/2} Γ_k(Id − R/ρ), band-limited, in Λ order.
    pub a: Vec<ScalarField>,
    /// Largest relative spectral tail removed across the a_k.
    pub max_tail: f64,
}

/// Evaluation grid for the pointwise (non-polynomial) amplitude algebra:
/// large enough that the reported truncation tails are meaningful.
fn eval_grid_size(bandwidth: usize, r: &SymTensorField) -> usize {
    next_pow2(8 * bandwidth).max(r.grid().n())
}

/// Sampled entry values of a stress slice on the evaluation grid.
fn entry_values(r: &SymTensorField, m: usize) -> Result<[Array2<f64>; 3]> {
    let up = |f: &ScalarField| -> Result<Array2<f64>> {
        Ok(if f.grid().n() == m { f.values() } else { f.resampled(m)?.values() })
    };
    Ok([up(r.xx())?, up(r.xy())?, up(r.yy())?])
}

/// Regularize one stress slice: pointwise ρ = χ(|R|), primitive stresses,
/// and the θ value supplied by the caller's `TimeCutoff`.
pub fn regularize_slice(
    r: &SymTensorField,
    theta: f64,
    bandwidth: usize,
) -> Result<RegularizedSlice> {
    if r.bandwidth() > bandwidth {
        return Err(EngineError::InvalidParam(format!(
            "stress bandwidth {} exceeds amplitude bandwidth {bandwidth}",
            r.bandwidth()
        )));
    }
    let m = eval_grid_size(bandwidth, r);
    let [vxx, vxy, vyy] = entry_values(r, m)?;
    for v in vxx.iter().chain(vxy.iter()).chain(vyy.iter()) {
        if !v.is_finite() {
            return Err(EngineError::Precondition("non-finite stress value".into()));
        }
    }
    let mut rho_vals = Array2::<f64>::zeros((m, m));
    let mut qk_vals: Vec<Array2<f64>> = (0..4).map(|_| Array2::zeros((m, m))).collect();
    let mut min_gamma = f64::INFINITY;
    for ((i, j), rv) in rho_vals.indexed_iter_mut() {
        let (xx, xy, yy) = (vxx[[i, j]], vxy[[i, j]], vyy[[i, j]]);
        let rho = chi(opnorm_sym(xx, xy, yy));
        *rv = rho;
        // Id − R/ρ
        let g = gamma_sq(1.0 - xx / rho, -xy / rho, 1.0 - yy / rho);
        for (k, qk) in qk_vals.iter_mut().enumerate() {
            min_gamma = min_gamma.min(g[k]);
            qk[[i, j]] = rho * g[k].max(0.0);
        }
    }
    if min_gamma < -AMPLITUDE_FLOOR {
        return Err(EngineError::Precondition(format!(
            "squared amplitude dipped to {min_gamma} < -{AMPLITUDE_FLOOR}: \
             stress entries leave the geometric-lemma ball"
        )));
    }
    let grid = r.grid().with_n(m)?;
    // store band-limited results on the smallest grid that holds them
    let store = next_pow2(2 * bandwidth + 2).min(m);
    let (rho, rho_tail) = ScalarField::from_values(grid, &rho_vals).truncated(bandwidth);
    let rho = rho.resampled(store)?;
    let units = standard_units();
    let mut r_k = Vec::with_capacity(4);
    for (k, qv) in qk_vals.iter().enumerate() {
        let (q, _) = ScalarField::from_values(grid, qv).truncated(bandwidth);
        let q = q.resampled(store)?;
        let e = units[k];
        r_k.push(SymTensorField::from_comps(
            q.scaled(e[0] * e[0]),
            q.scaled(e[0] * e[1]),
            q.scaled(e[1] * e[1]),
        ));
    }
    Ok(RegularizedSlice { theta, rho, r: r.clone(), r_k, rho_tail, min_gamma_sq: min_gamma })
}

/// Build the amplitude fields a_k = θ ρ^{1/2} Γ_k(Id − R/ρ) for one slice.
pub fn build_amplitude_slice(reg: &RegularizedSlice, bandwidth: usize) -> Result<AmplitudeSlice> {
    let m = eval_grid_size(bandwidth, &reg.r);
    let [vxx, vxy, vyy] = entry_values(&reg.r, m)?;
    let grid = reg.r.grid().with_n(m)?;
    let mut max_tail: f64 = 0.0;
    let mut a = Vec::with_capacity(4);
    for k in 0..4 {
        let mut vals = Array2::<f64>::zeros((m, m));
        for ((i, j), v) in vals.indexed_iter_mut() {
            let (xx, xy, yy) = (vxx[[i, j]], vxy[[i, j]], vyy[[i, j]]);
            let rho = chi(opnorm_sym(xx, xy, yy));
            let g = gamma_sq(1.0 - xx / rho, -xy / rho, 1.0 - yy / rho);
            *v = reg.theta * (rho * g[k].max(0.0)).sqrt();
        }
        let (field, tail) = ScalarField::from_values(grid, &vals).truncated(bandwidth);
        let field = field.resampled(next_pow2(2 * bandwidth + 2).min(m))?;
        max_tail = max_tail.max(tail);
        a.push(field);
    }
    Ok(AmplitudeSlice { theta: reg.theta, a, max_tail })
}
