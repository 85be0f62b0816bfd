//! Intermittent temporal profiles: the master burst G, the concentrated
//! periodic profiles g_k, the compensators h_k, and the phase functions φ_k.
//!
//! All evaluators are closed-form piecewise expressions; the only numerics
//! are two precomputed high-order antiderivative tables of G and G² on
//! [0, 1], accurate to ≤ 1e−12, so the profiles carry no time-discretization
//! error of their own.
//!
//! Conventions:
//! - G is supported in (1/8, 3/8) ∪ (5/8, 7/8) ⊂ (0, 1) with ∫G = 0 (odd
//!   about t = 1/2) and ∫G² = 1;
//! - g̃_k is the 1-periodic extension of κ^{1/2} G(κ(t − t_k)): one burst of
//!   width 1/κ per unit period, starting at the offset t_k;
//! - g_k(t) = g̃_k(σt);
//! - h_k(t) = ∫₀^{σt} (g̃_k²(s) − 1) ds, so that ∂_t(σ⁻¹ h_k) = g_k² − 1
//!   exactly and h_k is σ⁻¹-periodic with ‖h_k‖∞ ≤ 1;
//! - φ_k(t) = ω ∫₀^t g_k(s) ds, so that φ_k′ = ω g_k exactly.

use std::sync::Arc;

use once_cell::sync::Lazy;

use crate::bump::{bump, bump_deriv, bump_sq_integral};
use crate::error::{EngineError, Result};
use crate::intervals::IntervalSet;
use crate::quad::{integrate, CumulativeTable};

/// Normalizer c_G with G = c_G (bump(8t−2) − bump(8t−6)): the two bumps are
/// disjoint and each contributes ∫bump²/8, so ∫G² = c_G²·∫bump²/4.
pub fn master_normalizer() -> f64 {
    (4.0 / bump_sq_integral()).sqrt()
}

/// The master burst G on [0, 1] (zero outside).
pub fn master(t: f64) -> f64 {
    master_normalizer() * (bump(8.0 * t - 2.0) - bump(8.0 * t - 6.0))
}

/// G′.
pub fn master_deriv(t: f64) -> f64 {
    master_normalizer() * 8.0 * (bump_deriv(8.0 * t - 2.0) - bump_deriv(8.0 * t - 6.0))
}

/// ‖G‖_{L^p([0,1])} by composite quadrature over the two support lobes.
pub fn master_lp(p: f64) -> f64 {
    let lobes = integrate(|t| master(t).abs().powf(p), 0.125, 0.375, 200, 16)
        + integrate(|t| master(t).abs().powf(p), 0.625, 0.875, 200, 16);
    lobes.powf(1.0 / p)
}

/// ‖G‖∞ = c_G · max bump = c_G e⁻¹.
pub fn master_linf() -> f64 {
    master_normalizer() * (-1.0f64).exp()
}

/// Antiderivative tables H1(y) = ∫₀^y G and H2(y) = ∫₀^y G² on [0, 1].
fn tables() -> &'static (CumulativeTable, CumulativeTable) {
    static T: Lazy<(CumulativeTable, CumulativeTable)> = Lazy::new(|| {
        let g = Arc::new(master);
        let g2 = Arc::new(|t: f64| master(t) * master(t));
        (
            CumulativeTable::build(g, 0.0, 1.0, 512, 16),
            CumulativeTable::build(g2, 0.0, 1.0, 512, 16),
        )
    });
    &T
}

/// Build parameters for the profile family.
#[derive(Debug, Clone)]
pub struct TemporalParams {
    /// Temporal concentration κ ≥ 2·(number of offsets).
    pub kappa: f64,
    /// Oscillation σ (positive integer).
    pub sigma: usize,
    /// Acceleration ω > 0.
    pub omega: f64,
    /// Burst offsets t_k ∈ [0, 1), one per direction.
    pub offsets: Vec<f64>,
}

/// Evenly staggered offsets k/count, the default placement.
pub fn standard_offsets(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 / count as f64).collect()
}

/// The profile family with exact evaluators.
#[derive(Debug, Clone)]
pub struct TemporalProfiles {
    kappa: f64,
    sigma: usize,
    omega: f64,
    offsets: Vec<f64>,
}

/// Validate parameters and build the family.
///
/// Rejects non-positive knobs, offsets outside [0, 1), and any pair of
/// overlapping burst windows (each burst occupies (t_k, t_k + 1/κ) mod 1).
pub fn build_temporal(params: TemporalParams) -> Result<TemporalProfiles> {
    let TemporalParams { kappa, sigma, omega, offsets } = params;
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(EngineError::InvalidParam(format!("kappa must be >= 1, got {kappa}")));
    }
    if sigma == 0 {
        return Err(EngineError::InvalidParam("sigma must be a positive integer".into()));
    }
    if !(omega > 0.0) {
        return Err(EngineError::InvalidParam(format!("omega must be > 0, got {omega}")));
    }
    if offsets.is_empty() {
        return Err(EngineError::InvalidParam("need at least one offset".into()));
    }
    for &t in &offsets {
        if !(0.0..1.0).contains(&t) {
            return Err(EngineError::InvalidParam(format!("offset {t} outside [0,1)")));
        }
    }
    if kappa < 2.0 * offsets.len() as f64 {
        return Err(EngineError::InvalidParam(format!(
            "kappa = {kappa} too small: burst disjointness needs kappa >= 2·|Λ| = {}",
            2 * offsets.len()
        )));
    }
    // Pairwise disjointness of the burst windows (t_k, t_k + 1/κ) mod 1.
    let mut sorted = offsets.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let width = 1.0 / kappa;
    for i in 0..sorted.len() {
        let next = if i + 1 < sorted.len() { sorted[i + 1] } else { sorted[0] + 1.0 };
        if sorted[i] + width > next {
            return Err(EngineError::InvalidParam(format!(
                "burst windows overlap: offsets {} and {} closer than 1/kappa = {width}",
                sorted[i], next
            )));
        }
    }
    Ok(TemporalProfiles { kappa, sigma, omega, offsets })
}

/// Fractional part in [0, 1).
fn frac(x: f64) -> f64 {
    x - x.floor()
}

impl TemporalProfiles {
    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// g̃_k(s): 1-periodic, one burst per period.
    pub fn g_tilde(&self, k: usize, s: f64) -> f64 {
        self.kappa.sqrt() * master(self.kappa * frac(s - self.offsets[k]))
    }

    /// g_k(t) = g̃_k(σt).
    pub fn g(&self, k: usize, t: f64) -> f64 {
        self.g_tilde(k, self.sigma as f64 * t)
    }

    /// Analytic g_k′(t) = σ κ^{3/2} G′(κ·frac(σt − t_k)).
    pub fn g_deriv(&self, k: usize, t: f64) -> f64 {
        self.sigma as f64
            * self.kappa.powf(1.5)
            * master_deriv(self.kappa * frac(self.sigma as f64 * t - self.offsets[k]))
    }

    /// ∫₀^x g̃_k(s) ds for arbitrary real x (zero net integral per period).
    fn g_tilde_integral(&self, k: usize, x: f64) -> f64 {
        let tau = frac(x - self.offsets[k]);
        let tau0 = frac(-self.offsets[k]);
        let partial = |tau: f64| {
            let y = (self.kappa * tau).min(1.0);
            tables().0.eval(y) / self.kappa.sqrt()
        };
        partial(tau) - partial(tau0)
    }

    /// ∫₀^x g̃_k²(s) ds for arbitrary real x (unit integral per period).
    fn g_tilde_sq_integral(&self, k: usize, x: f64) -> f64 {
        let shifted = x - self.offsets[k];
        let shifted0 = -self.offsets[k];
        let whole = |z: f64| {
            let y = (self.kappa * frac(z)).min(1.0);
            z.floor() + tables().1.eval(y)
        };
        whole(shifted) - whole(shifted0)
    }

    /// h_k(t) = ∫₀^{σt} (g̃_k² − 1) ds; satisfies ∂_t(σ⁻¹h_k) = g_k² − 1
    /// exactly, is σ⁻¹-periodic, and obeys ‖h_k‖∞ ≤ 1.
    pub fn h(&self, k: usize, t: f64) -> f64 {
        let x = self.sigma as f64 * t;
        self.g_tilde_sq_integral(k, x) - x
    }

    /// φ_k(t) = ω ∫₀^t g_k, so φ_k′ = ω g_k exactly.
    pub fn phi(&self, k: usize, t: f64) -> f64 {
        self.omega / self.sigma as f64 * self.g_tilde_integral(k, self.sigma as f64 * t)
    }

    /// φ_k′(t) = ω g_k(t).
    pub fn phi_deriv(&self, k: usize, t: f64) -> f64 {
        self.omega * self.g(k, t)
    }

    /// Support of g_k within (0, 1): σ copies per offset of the two scaled
    /// lobes of G.
    pub fn g_support(&self, k: usize) -> IntervalSet {
        let s = self.sigma as f64;
        let tk = self.offsets[k];
        let mut raw = Vec::new();
        for n in 0..self.sigma {
            for (lo, hi) in [(0.125, 0.375), (0.625, 0.875)] {
                let a = (tk + lo / self.kappa + n as f64) / s;
                let b = (tk + hi / self.kappa + n as f64) / s;
                raw.push((a.max(0.0), b.min(1.0)));
                // the window may also wrap in from the previous period
                raw.push(((a - 1.0 / s).max(0.0), (b - 1.0 / s).min(1.0)));
            }
        }
        IntervalSet::new(raw)
    }

    /// The exceptional set E ⊂ (0, 1): per burst, the open interval of
    /// radius (κσ)⁻¹ about the burst's center.  Contains every support
    /// point of every g_k, with measure ≤ 2|Λ|/κ per unit time.
    pub fn exceptional_set(&self) -> IntervalSet {
        let s = self.sigma as f64;
        let r = 1.0 / (self.kappa * s);
        let mut raw = Vec::new();
        for &tk in &self.offsets {
            for n in 0..self.sigma {
                let c = (tk + 0.5 / self.kappa + n as f64) / s;
                for shift in [0.0, -1.0] {
                    let c = c + shift;
                    raw.push(((c - r).max(0.0), (c + r).min(1.0)));
                }
            }
        }
        IntervalSet::new(raw)
    }

    /// Reference ‖g_k‖_{L^p([0,1])} = κ^{1/2−1/p} ‖G‖_p (exact scaling of
    /// the burst profile; independent of k and σ).
    pub fn g_lp(&self, p: f64) -> f64 {
        self.kappa.powf(0.5 - 1.0 / p) * master_lp(p)
    }

    /// ‖g_k‖∞ = κ^{1/2} ‖G‖∞.
    pub fn g_linf(&self) -> f64 {
        self.kappa.sqrt() * master_linf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles(kappa: f64, sigma: usize, omega: f64) -> TemporalProfiles {
        build_temporal(TemporalParams {
            kappa,
            sigma,
            omega,
            offsets: standard_offsets(4),
        })
        .unwrap()
    }

    #[test]
    fn master_is_normalized_and_zero_mean() {
        let i2 = integrate(|t| master(t) * master(t), 0.0, 1.0, 400, 16);
        let i1 = integrate(master, 0.0, 1.0, 400, 16);
        assert!((i2 - 1.0).abs() < 1e-12, "∫G² = {i2}");
        assert!(i1.abs() < 1e-12, "∫G = {i1}");
    }

    #[test]
    fn g_square_integrates_to_one() {
        let pr = profiles(16.0, 2, 1.0);
        for k in 0..4 {
            let v = integrate(|t| pr.g(k, t).powi(2), 0.0, 1.0, 4096, 16);
            assert!((v - 1.0).abs() < 1e-8, "k={k}: ∫g² = {v}");
            let m = integrate(|t| pr.g(k, t), 0.0, 1.0, 4096, 16);
            assert!(m.abs() < 1e-10, "k={k}: ∫g = {m}");
        }
    }

    #[test]
    fn burst_disjointness_rejected_when_kappa_small() {
        assert!(build_temporal(TemporalParams {
            kappa: 6.0,
            sigma: 1,
            omega: 1.0,
            offsets: standard_offsets(4),
        })
        .is_err());
    }

    #[test]
    fn supports_pairwise_disjoint() {
        let pr = profiles(8.0, 2, 1.0);
        for k in 0..4 {
            for kp in 0..4 {
                if k == kp {
                    continue;
                }
                // sample both on a fine grid: products vanish identically
                for i in 0..4096 {
                    let t = i as f64 / 4096.0;
                    assert_eq!(pr.g(k, t) * pr.g(kp, t), 0.0, "k={k} kp={kp} t={t}");
                }
            }
        }
    }

    #[test]
    fn h_compensates_g_square() {
        let pr = profiles(16.0, 2, 4.0);
        // ∂_t(σ⁻¹ h_k) = g_k² − 1 via 4th-order central differences
        let hfd = 1e-5;
        for k in 0..4 {
            for &t in &[0.11, 0.26, 0.33, 0.49, 0.62, 0.9] {
                let d = (-pr.h(k, t + 2.0 * hfd) + 8.0 * pr.h(k, t + hfd)
                    - 8.0 * pr.h(k, t - hfd)
                    + pr.h(k, t - 2.0 * hfd))
                    / (12.0 * hfd)
                    / pr.sigma() as f64;
                let rhs = pr.g(k, t).powi(2) - 1.0;
                assert!((d - rhs).abs() < 1e-5, "k={k} t={t}: {d} vs {rhs}");
            }
        }
        // ‖h‖∞ ≤ 1 and σ⁻¹-periodicity
        for k in 0..4 {
            for i in 0..2000 {
                let t = i as f64 / 2000.0;
                assert!(pr.h(k, t).abs() <= 1.0 + 1e-10);
            }
            let p = 1.0 / pr.sigma() as f64;
            for &t in &[0.03, 0.21, 0.37] {
                assert!((pr.h(k, t + p) - pr.h(k, t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn phi_derivative_is_omega_g() {
        let pr = profiles(16.0, 2, 8.0);
        let hfd = 1e-6;
        for k in 0..4 {
            for &t in &[0.07, 0.13, 0.19, 0.55, 0.81] {
                let d = (pr.phi(k, t + hfd) - pr.phi(k, t - hfd)) / (2.0 * hfd);
                assert!(
                    (d - pr.phi_deriv(k, t)).abs() < 1e-4 * (1.0 + pr.phi_deriv(k, t).abs()),
                    "k={k} t={t}"
                );
            }
        }
    }

    #[test]
    fn support_and_exceptional_set_geometry() {
        let pr = profiles(16.0, 2, 1.0);
        let e = pr.exceptional_set();
        for k in 0..4 {
            let supp = pr.g_support(k);
            // every support point of g_k lies in E
            for &(a, b) in supp.components() {
                for t in [a + 1e-9, 0.5 * (a + b), b - 1e-9] {
                    assert!(e.contains(t), "k={k} t={t} not in E");
                    assert!(pr.g(k, t).abs() >= 0.0);
                }
            }
            // g vanishes off its support
            for i in 0..2048 {
                let t = i as f64 / 2048.0;
                if !supp.contains(t) {
                    assert_eq!(pr.g(k, t), 0.0, "k={k} t={t}");
                }
            }
        }
        // measure bound L¹([0,t] ∩ E) ≤ 4|Λ| t/κ for the spec's test times
        for &t in &[0.1, 0.5, 1.0] {
            let m = e.measure_within(0.0, t);
            assert!(m <= 4.0 * 4.0 * t / pr.kappa() + 1e-14, "t={t}: {m}");
        }
    }

    #[test]
    fn kappa_one_single_direction_reduces_to_master() {
        let pr = build_temporal(TemporalParams {
            kappa: 2.0,
            sigma: 1,
            omega: 1.0,
            offsets: vec![0.0],
        })
        .unwrap();
        // κ=2 single burst: ∫g² = 1 still
        let v = integrate(|t| pr.g(0, t).powi(2), 0.0, 1.0, 2048, 16);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linf_scaling() {
        // κ=16: ‖g‖∞ = 4‖G‖∞
        let pr = profiles(16.0, 2, 1.0);
        let mut m: f64 = 0.0;
        for i in 0..200_000 {
            m = m.max(pr.g(0, i as f64 / 200_000.0).abs());
        }
        assert!((pr.g_linf() - 4.0 * master_linf()).abs() < 1e-12);
        assert!((m - pr.g_linf()).abs() < 1e-4 * pr.g_linf());
    }

    #[test]
    fn lp_norm_quadrature_matches_scaling_formula() {
        let pr = profiles(16.0, 1, 1.0);
        for &p in &[1.0, 1.5, 3.0] {
            let direct =
                integrate(|t| pr.g(0, t).abs().powf(p), 0.0, 1.0, 8192, 16).powf(1.0 / p);
            let reference = pr.g_lp(p);
            assert!(
                (direct - reference).abs() < 1e-6 * reference,
                "p={p}: {direct} vs {reference}"
            );
        }
    }
}
