//! The velocity perturbation w = w^(p) + w^(c) + w^(o) + w^(a) and the
//! exceptional time set E.
//!
//! Structure of the build (all per time slice, all in the exact band-limited
//! algebra):
//!
//! - principal part  w_p = Σ_k a_k g_k (W_k ∘ Φ_k);
//! - stream form     w_p + w_c = σ⁻¹ Σ_k ∇⊥[a_k g_k (Ψ_k ∘ Φ_k)], so the
//!   corrector is *defined* as the stream form minus w_p and div(w_p + w_c)
//!   vanishes identically;
//! - time correctors w_o = −σ⁻¹ θ² P Σ_k h_k div R_k and
//!                   w_a = −ω⁻¹ σ P Σ_k a_k² g_k |W_k ∘ Φ_k|² e_k,
//!   both divergence-free and zero-mean through the Leray projection.
//!
//! Off the exceptional set E every g_k vanishes identically, so w_p, w_c and
//! w_a are exactly zero there and the full perturbation reduces to w_o.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::amplitude::{
    build_amplitude_slice, regularize_slice, standard_units, AmplitudeSlice, RegularizedSlice,
    TimeCutoff,
};
use crate::error::{EngineError, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::intervals::IntervalSet;
use crate::jets::JetFamily;
use crate::quad::integrate;
use crate::temporal::TemporalProfiles;

/// A time-dependent stress field, the input error of the iteration step.
pub trait StressTrajectory: Sync {
    fn stress_at(&self, t: f64) -> Result<SymTensorField>;
}

/// A stress frozen in time.
pub struct StaticStress(pub SymTensorField);

impl StressTrajectory for StaticStress {
    fn stress_at(&self, _t: f64) -> Result<SymTensorField> {
        Ok(self.0.clone())
    }
}

/// A fixed spatial profile with smooth scalar time modulation.
pub struct ModulatedStress {
    pub base: SymTensorField,
    pub modulation: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl StressTrajectory for ModulatedStress {
    fn stress_at(&self, t: f64) -> Result<SymTensorField> {
        Ok(self.base.scaled((self.modulation)(t)))
    }
}

/// Slice-wise builder of the perturbation pieces.
pub struct PerturbationBuilder<'a> {
    pub jets: &'a JetFamily,
    pub profiles: &'a TemporalProfiles,
    pub cutoff: TimeCutoff,
    pub stress: &'a dyn StressTrajectory,
    /// Band limit for the amplitude fields.
    pub bandwidth: usize,
    /// Memoized slices keyed by the time's bit pattern: stress assembly and
    /// finite differencing revisit the same instants many times.
    reg_cache: Mutex<HashMap<u64, Arc<RegularizedSlice>>>,
    amp_cache: Mutex<HashMap<u64, Arc<AmplitudeSlice>>>,
}

/// Bound on cached slices; beyond it both maps are simply cleared.
const SLICE_CACHE_CAP: usize = 16;

impl<'a> PerturbationBuilder<'a> {
    pub fn new(
        jets: &'a JetFamily,
        profiles: &'a TemporalProfiles,
        cutoff: TimeCutoff,
        stress: &'a dyn StressTrajectory,
        bandwidth: usize,
    ) -> Result<Self> {
        if jets.len() != profiles.count() {
            return Err(EngineError::InvalidParam(format!(
                "{} jets but {} temporal offsets",
                jets.len(),
                profiles.count()
            )));
        }
        if jets.len() != 4 {
            return Err(EngineError::InvalidParam(
                "the amplitude decomposition is fixed to the four standard directions".into(),
            ));
        }
        Ok(Self {
            jets,
            profiles,
            cutoff,
            stress,
            bandwidth,
            reg_cache: Mutex::new(HashMap::new()),
            amp_cache: Mutex::new(HashMap::new()),
        })
    }

    /// Regularized stress slice at time t (θ from the shared cutoff).
    pub fn regularized(&self, t: f64) -> Result<Arc<RegularizedSlice>> {
        if let Some(hit) = self.reg_cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(hit.clone());
        }
        let r = self.stress.stress_at(t)?;
        let slice = Arc::new(regularize_slice(&r, self.cutoff.theta(t), self.bandwidth)?);
        let mut cache = self.reg_cache.lock().unwrap();
        if cache.len() >= SLICE_CACHE_CAP {
            cache.clear();
        }
        cache.insert(t.to_bits(), slice.clone());
        Ok(slice)
    }

    /// Amplitude slice at time t.
    pub fn amplitudes(&self, t: f64) -> Result<Arc<AmplitudeSlice>> {
        if let Some(hit) = self.amp_cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(hit.clone());
        }
        let reg = self.regularized(t)?;
        let slice = Arc::new(build_amplitude_slice(&reg, self.bandwidth)?);
        let mut cache = self.amp_cache.lock().unwrap();
        if cache.len() >= SLICE_CACHE_CAP {
            cache.clear();
        }
        cache.insert(t.to_bits(), slice.clone());
        Ok(slice)
    }

    /// Composed jet pieces (W_k∘Φ_k, W_k^c∘Φ_k, Ψ_k∘Φ_k) at time t.
    pub fn jet_comp(&self, k: usize, t: f64) -> Result<(VectorField, VectorField, ScalarField)> {
        let sigma = self.profiles.sigma();
        let phi = self.profiles.phi(k, t);
        let jet = &self.jets.jets[k];
        let shift = [phi * jet.e[0], phi * jet.e[1]];
        Ok((
            jet.w.dilate_shift(sigma, shift)?,
            jet.w_c.dilate_shift(sigma, shift)?,
            jet.psi.dilate_shift(sigma, shift)?,
        ))
    }

    /// Directions with active bursts at time t (g_k(t) ≠ 0).
    pub fn active(&self, t: f64) -> Vec<usize> {
        (0..self.jets.len())
            .filter(|&k| self.profiles.g(k, t) != 0.0)
            .collect()
    }

    /// Principal part w_p(t) = Σ_k a_k g_k (W_k∘Φ_k).
    pub fn w_p(&self, t: f64) -> Result<VectorField> {
        let active = self.active(t);
        if active.is_empty() {
            return Ok(VectorField::zeros(self.grid_of(t)?));
        }
        let amp = self.amplitudes(t)?;
        let mut sum: Option<VectorField> = None;
        for k in active {
            let g = self.profiles.g(k, t);
            let (w, _, _) = self.jet_comp(k, t)?;
            let term = w.mul_scalar(&amp.a[k])?.scaled(g);
            sum = Some(match sum {
                None => term,
                Some(s) => s.add(&term),
            });
        }
        Ok(sum.unwrap())
    }

    /// Stream form σ⁻¹ Σ_k ∇⊥[a_k g_k (Ψ_k∘Φ_k)] = w_p + w_c, divergence-free
    /// by construction.
    pub fn stream(&self, t: f64) -> Result<VectorField> {
        let active = self.active(t);
        if active.is_empty() {
            return Ok(VectorField::zeros(self.grid_of(t)?));
        }
        let amp = self.amplitudes(t)?;
        let sigma = self.profiles.sigma() as f64;
        let mut sum: Option<ScalarField> = None;
        for k in active {
            let g = self.profiles.g(k, t);
            let (_, _, psi) = self.jet_comp(k, t)?;
            let term = psi.mul(&amp.a[k])?.scaled(g / sigma);
            sum = Some(match sum {
                None => term,
                Some(s) => s.add(&term),
            });
        }
        Ok(sum.unwrap().grad_perp())
    }

    /// Corrector w_c(t) = stream(t) − w_p(t).
    pub fn w_c(&self, t: f64) -> Result<VectorField> {
        Ok(self.stream(t)?.sub(&self.w_p(t)?))
    }

    /// Oscillation compensator w_o(t) = −σ⁻¹ θ² P Σ_k h_k div R_k.
    pub fn w_o(&self, t: f64) -> Result<VectorField> {
        let reg = self.regularized(t)?;
        let theta = reg.theta;
        if theta == 0.0 {
            return Ok(VectorField::zeros(reg.rho.grid()));
        }
        let sigma = self.profiles.sigma() as f64;
        let mut sum: Option<VectorField> = None;
        for (k, rk) in reg.r_k.iter().enumerate() {
            let h = self.profiles.h(k, t);
            let term = rk.div().scaled(h);
            sum = Some(match sum {
                None => term,
                Some(s) => s.add(&term),
            });
        }
        Ok(sum.unwrap().scaled(-theta * theta / sigma).leray_p())
    }

    /// Acceleration compensator w_a(t) = −ω⁻¹ σ P Σ_k a_k² g_k |W_k∘Φ_k|² e_k.
    pub fn w_a(&self, t: f64) -> Result<VectorField> {
        let active = self.active(t);
        if active.is_empty() {
            return Ok(VectorField::zeros(self.grid_of(t)?));
        }
        let amp = self.amplitudes(t)?;
        let units = standard_units();
        let factor = -(self.profiles.sigma() as f64) / self.profiles.omega();
        let mut sum: Option<VectorField> = None;
        for k in active {
            let g = self.profiles.g(k, t);
            let (w, _, _) = self.jet_comp(k, t)?;
            let asq = amp.a[k].mul(&amp.a[k])?;
            let wsq = w.dot(&w)?;
            let scalar = asq.mul(&wsq)?.scaled(g);
            let e = units[k];
            let term = VectorField::from_comps(scalar.scaled(e[0]), scalar.scaled(e[1]));
            sum = Some(match sum {
                None => term,
                Some(s) => s.add(&term),
            });
        }
        Ok(sum.unwrap().scaled(factor).leray_p())
    }

    /// Full perturbation w(t).
    pub fn w_total(&self, t: f64) -> Result<VectorField> {
        Ok(self
            .stream(t)?
            .add(&self.w_o(t)?)
            .add(&self.w_a(t)?))
    }

    /// The exceptional set E of the temporal profiles.
    pub fn exceptional_set(&self) -> IntervalSet {
        self.profiles.exceptional_set()
    }

    /// Grid carrying the (possibly zero) slice at time t: the amplitude
    /// grid, which every piece is later upcast from.
    fn grid_of(&self, t: f64) -> Result<crate::grid::Grid> {
        Ok(self.regularized(t)?.rho.grid())
    }

    /// Nonuniform time grid: `coarse` uniform points on [0, 1] plus
    /// `per_component` points inside each connected component of E.
    pub fn time_grid(&self, coarse: usize, per_component: usize) -> Vec<f64> {
        let e = self.exceptional_set();
        let mut ts: Vec<f64> = (0..=coarse).map(|i| i as f64 / coarse as f64).collect();
        for &(a, b) in e.components() {
            for j in 0..per_component {
                ts.push(a + (b - a) * (j as f64 + 0.5) / per_component as f64);
            }
        }
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ts.dedup();
        ts
    }
}

/// Composite Gauss-Legendre quadrature of `f` over [a, b], adapted to the
/// component structure of a set: each component of `set` ∩ [a, b] and each
/// gap between components gets its own composite rule, so concentrated
/// integrands are resolved without a global fine grid.
pub fn integrate_adapted(
    set: &IntervalSet,
    a: f64,
    b: f64,
    gap_panels: usize,
    component_panels: usize,
    order: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let mut cuts = vec![a, b];
    for &(lo, hi) in set.components() {
        if hi > a && lo < b {
            cuts.push(lo.max(a));
            cuts.push(hi.min(b));
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let panels = if set.contains(mid) { component_panels } else { gap_panels };
        total += integrate(&f, lo, hi, panels, order);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_sym_traceless;
    use crate::grid::Grid;
    use crate::jets::{build_jets, JetParams};
    use crate::temporal::{build_temporal, standard_offsets, TemporalParams};
    use crate::tol::TOL_STRUCTURE;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        jets: JetFamily,
        profiles: TemporalProfiles,
        cutoff: TimeCutoff,
        stress: StaticStress,
    }

    impl Fixture {
        fn smoke() -> Self {
            let grid = Grid::new(256, 4).unwrap();
            let jets = build_jets(JetParams::standard(grid, 8.0, 16.0)).unwrap();
            let profiles = build_temporal(TemporalParams {
                kappa: 8.0,
                sigma: 1,
                omega: 16.0,
                offsets: standard_offsets(4),
            })
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let raw = random_sym_traceless(Grid::new(64, 4).unwrap(), 4, &mut rng);
            let base = raw.scaled(0.5 / raw.linf_norm());
            // thresholds d₀ = 1/64, d₁ = 1/32: thin ramps, so the bursts
            // used by the tests sit where θ = 1
            let cutoff = TimeCutoff::new((0.0, 1.0), 8.0).unwrap();
            Self { jets, profiles, cutoff, stress: StaticStress(base) }
        }

        fn builder(&self) -> PerturbationBuilder<'_> {
            PerturbationBuilder::new(&self.jets, &self.profiles, self.cutoff, &self.stress, 48)
                .unwrap()
        }
    }

    /// A time inside the k=0 burst for the smoke profile.
    fn burst_time(profiles: &TemporalProfiles, k: usize) -> f64 {
        let supp = profiles.g_support(k);
        let (a, b) = supp.components()[0];
        0.5 * (a + b)
    }

    #[test]
    fn stream_form_is_divergence_free() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let t = burst_time(&fx.profiles, 0);
        let s = b.stream(t).unwrap();
        assert!(s.l2_norm() > 0.0);
        assert!(s.div().l2_norm() <= TOL_STRUCTURE * s.l2_norm());
        // and w_p + w_c reproduces it by definition
        let wp = b.w_p(t).unwrap();
        let wc = b.w_c(t).unwrap();
        assert!(wp.add(&wc).sub(&s).l2_norm() <= 1e-14 * s.l2_norm());
    }

    #[test]
    fn compensators_divergence_free_and_zero_mean() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let t = burst_time(&fx.profiles, 1);
        for v in [b.w_o(t).unwrap(), b.w_a(t).unwrap()] {
            assert!(v.l2_norm() > 0.0);
            assert!(v.div().l2_norm() <= TOL_STRUCTURE * v.l2_norm());
            let m = v.mean();
            assert!(m[0].abs() <= 1e-13 && m[1].abs() <= 1e-13);
        }
        // the stream form is mean-free as well (a perp-gradient)
        let s = b.stream(t).unwrap();
        let m = s.mean();
        assert!(m[0].abs() <= 1e-13 && m[1].abs() <= 1e-13);
    }

    #[test]
    fn concentrated_pieces_vanish_off_e_exactly() {
        // κ = 32 so E covers only a quarter of the interval
        let mut fx = Fixture::smoke();
        fx.profiles = build_temporal(TemporalParams {
            kappa: 32.0,
            sigma: 1,
            omega: 16.0,
            offsets: standard_offsets(4),
        })
        .unwrap();
        let b = fx.builder();
        let e = b.exceptional_set();
        // pick several times strictly outside E
        let mut checked = 0;
        for i in 0..50 {
            let t = (i as f64 + 0.37) / 50.0;
            if e.contains(t) {
                continue;
            }
            assert_eq!(b.w_p(t).unwrap().l2_norm(), 0.0);
            assert_eq!(b.w_c(t).unwrap().l2_norm(), 0.0);
            assert_eq!(b.w_a(t).unwrap().l2_norm(), 0.0);
            // total reduces to w_o
            let w = b.w_total(t).unwrap();
            let wo = b.w_o(t).unwrap();
            assert!(w.sub(&wo).l2_norm() == 0.0);
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn no_cross_interactions_in_time() {
        // at any t at most one g_k is active (disjoint bursts)
        let fx = Fixture::smoke();
        let b = fx.builder();
        for i in 0..500 {
            let t = i as f64 / 500.0;
            assert!(b.active(t).len() <= 1, "t={t}");
        }
    }

    #[test]
    fn principal_norm_tracks_amplitude_times_g() {
        // with ∮|W_k|² = 1 and a_k slowly varying, ‖w_p(t)‖₂ ≈ |g_k(t)| ‖a_k‖₂
        let fx = Fixture::smoke();
        let b = fx.builder();
        let t = burst_time(&fx.profiles, 2);
        let k = b.active(t)[0];
        assert_eq!(k, 2);
        let amp = b.amplitudes(t).unwrap();
        let wp = b.w_p(t).unwrap();
        let expect = fx.profiles.g(k, t).abs() * amp.a[k].l2_norm();
        // the jet concentrates where a_k varies, so allow a few percent
        assert!(
            (wp.l2_norm() - expect).abs() <= 0.05 * expect,
            "‖w_p‖ = {}, a·g = {expect}",
            wp.l2_norm()
        );
    }

    #[test]
    fn measure_bound_for_exceptional_set() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let e = b.exceptional_set();
        for &t in &[0.1, 0.5, 1.0] {
            assert!(e.measure_within(0.0, t) <= 4.0 * 4.0 * t / fx.profiles.kappa() + 1e-14);
        }
    }

    #[test]
    fn adapted_quadrature_matches_uniform_on_smooth() {
        let set = IntervalSet::new(vec![(0.2, 0.25), (0.6, 0.61)]);
        let f = |t: f64| (3.0 * t).sin() + t * t;
        let adapted = integrate_adapted(&set, 0.0, 1.0, 8, 8, 12, f);
        let reference = integrate(f, 0.0, 1.0, 64, 12);
        assert!((adapted - reference).abs() <= 1e-12);
    }

    #[test]
    fn time_grid_refines_components() {
        let fx = Fixture::smoke();
        let b = fx.builder();
        let ts = b.time_grid(16, 8);
        let e = b.exceptional_set();
        for &(lo, hi) in e.components() {
            let inside = ts.iter().filter(|&&t| t > lo && t < hi).count();
            assert!(inside >= 8, "component ({lo},{hi}) has {inside} points");
        }
    }
}
