//! Antidivergence operators on the torus.
//!
//! `antidiv_r` returns a symmetric traceless tensor with
//! div(Rv) = v − ∮v; `antidiv_b` is the bilinear variant with
//! div(B(v,A)) = vA − ∮vA for zero-mean A, which gains a factor σ⁻¹ when A
//! is σ⁻¹-periodic.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{EngineError, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::tol::TOL_IDENTITY;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Order −1 antidivergence: symmetric traceless Rv with div(Rv) = v − ∮v.
///
/// Spectral form per mode m ≠ 0, with d_i = 2πi m_i and ℓ = −4π²|m|²:
/// (Rv)_ij = (−d_k v_k δ_ij + d_i v_j + d_j v_i)/ℓ.
pub fn antidiv_r(v: &VectorField) -> SymTensorField {
    let grid = v.grid();
    let n = grid.n();
    let mut xx = Array2::<Complex64>::zeros((n, n));
    let mut xy = Array2::<Complex64>::zeros((n, n));
    let mut yy = Array2::<Complex64>::zeros((n, n));
    let vx = v.x().hat();
    let vy = v.y().hat();
    for a in 0..n {
        let m1 = grid.freq(a) as f64;
        for b in 0..n {
            let m2 = grid.freq(b) as f64;
            let q = m1 * m1 + m2 * m2;
            if q == 0.0 {
                continue;
            }
            let ell = -(TWO_PI * TWO_PI) * q;
            let d1 = Complex64::new(0.0, TWO_PI * m1);
            let d2 = Complex64::new(0.0, TWO_PI * m2);
            let c1 = vx[[a, b]];
            let c2 = vy[[a, b]];
            let divc = d1 * c1 + d2 * c2;
            xx[[a, b]] = (-divc + 2.0 * d1 * c1) / ell;
            xy[[a, b]] = (d1 * c2 + d2 * c1) / ell;
            yy[[a, b]] = (-divc + 2.0 * d2 * c2) / ell;
        }
    }
    let bw = v.bandwidth();
    SymTensorField::from_comps(
        ScalarField::from_coeffs(grid, xx, bw),
        ScalarField::from_coeffs(grid, xy, bw),
        ScalarField::from_coeffs(grid, yy, bw),
    )
}

/// Bilinear antidivergence B(v, A) = Σ_l v_l R(A_l) − R(f) with
/// f_j = Σ_{l,i} ∂_i v_l (R A_l)_{ij}; requires ∮A = 0.
pub fn antidiv_b(v: &VectorField, a: &SymTensorField) -> Result<SymTensorField> {
    let mean = a.mean();
    let scale = a.frobenius_l2().max(1e-300);
    let mean_mag = (mean[0].powi(2) + 2.0 * mean[1].powi(2) + mean[2].powi(2)).sqrt();
    if mean_mag > TOL_IDENTITY * scale.max(1.0) {
        return Err(EngineError::Precondition(format!(
            "antidiv_b requires a zero-mean tensor argument (relative mean {:.2e})",
            mean_mag / scale
        )));
    }

    let mut out: Option<SymTensorField> = None;
    let mut f_x: Option<ScalarField> = None;
    let mut f_y: Option<ScalarField> = None;
    for l in 0..2 {
        let ra_l = antidiv_r(&a.row(l));
        let v_l = v.comp(l);
        // first term: v_l · R(A_l), componentwise exact product
        let term = ra_l.mul_scalar(v_l)?;
        out = Some(match out {
            None => term,
            Some(acc) => acc.add(&term),
        });
        // f_j += ∂_i v_l (R A_l)_{ij} = (R A_l)ᵀ∇v_l (symmetric tensor)
        let grad_vl = v_l.grad();
        let contrib = ra_l.apply(&grad_vl)?;
        f_x = Some(match f_x {
            None => contrib.x().clone(),
            Some(acc) => acc.add(contrib.x()),
        });
        f_y = Some(match f_y {
            None => contrib.y().clone(),
            Some(acc) => acc.add(contrib.y()),
        });
    }
    let f = VectorField::from_comps(f_x.unwrap(), f_y.unwrap());
    Ok(out.unwrap().sub(&antidiv_r(&f)))
}

/// Re-verify the basic operator identities on `count` random band-limited
/// inputs and return the worst relative defect observed.
///
/// Per trial: div ∘ antidiv_r recovers the zero-mean part (and the result
/// is traceless); div B(v, A) = vA − ∮vA; the Leray projection is
/// divergence-free, idempotent, and complementary to its gradient part;
/// ∇⊥ of a random stream function is divergence-free.
pub fn operator_identity_sweep(grid: crate::grid::Grid, count: usize, seed: u64) -> Result<f64> {
    use crate::field::{random_scalar, random_sym_traceless, random_vector};
    use rand::SeedableRng;

    let bw = (grid.n() / 8).clamp(2, 12);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let v = random_vector(grid, bw, &mut rng);
        let vm = v.zero_mean();
        let scale = vm.l2_norm().max(1e-300);

        let r = antidiv_r(&v);
        worst = worst.max(r.div().sub(&vm).l2_norm() / scale);
        worst = worst.max(r.traceless_defect());

        let a = random_sym_traceless(grid, bw, &mut rng).zero_mean();
        let b = antidiv_b(&v, &a)?;
        let va = a.apply(&v)?.zero_mean();
        worst = worst.max(b.div().sub(&va).l2_norm() / va.l2_norm().max(1e-300));

        let (p, q) = v.leray();
        worst = worst.max(p.div().l2_norm() / scale);
        worst = worst.max(p.add(&q).sub(&v).l2_norm() / scale);
        let (pp, _) = p.leray();
        worst = worst.max(pp.sub(&p).l2_norm() / p.l2_norm().max(1e-300));

        let psi = random_scalar(grid, bw, &mut rng);
        let gp = psi.grad_perp();
        worst = worst.max(gp.div().l2_norm() / gp.l2_norm().max(1e-300));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_divfree, random_sym_traceless, random_vector};
    use crate::grid::Grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn div_of_antidiv_recovers_field() {
        let g = Grid::new(64, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_vector(g, 10, &mut rng);
        let r = antidiv_r(&v);
        let back = r.div();
        let vm = v.zero_mean();
        let err = back.sub(&vm).l2_norm() / vm.l2_norm();
        assert!(err < 1e-12, "err {err}");
        assert!(r.traceless_defect() < 1e-12);
    }

    #[test]
    fn antidiv_of_laplacian_is_sym_gradient() {
        // R(Δu) = ∇u + ∇uᵀ for div-free u; check on u = (sin 2πx₂, 0).
        let g = Grid::new(32, 1).unwrap();
        let u = VectorField::from_fns(g, |_, y| (TWO_PI * y).sin(), |_, _| 0.0);
        let r = antidiv_r(&u.laplacian());
        let expect_xy = ScalarField::from_fn(g, |_, y| TWO_PI * (TWO_PI * y).cos());
        assert!(r.xx().l2_norm() < 1e-10);
        assert!(r.yy().l2_norm() < 1e-10);
        assert!(r.xy().sub(&expect_xy).l2_norm() / expect_xy.l2_norm() < 1e-12);
    }

    #[test]
    fn bilinear_divergence_identity() {
        let g = Grid::new(64, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_vector(g, 6, &mut rng);
        let a = random_sym_traceless(g, 6, &mut rng).zero_mean();
        let b = antidiv_b(&v, &a).unwrap();
        // div B should equal vA − mean(vA)
        let va = a.apply(&v).unwrap().zero_mean();
        let err = b.div().sub(&va).l2_norm() / va.l2_norm();
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn leray_divfree_and_idempotent() {
        let g = Grid::new(64, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_vector(g, 9, &mut rng);
        let (p, q) = v.leray();
        assert!(p.div().l2_norm() / v.l2_norm() < 1e-12);
        assert!(p.add(&q).sub(&v).l2_norm() / v.l2_norm() < 1e-13);
        let (pp, _) = p.leray();
        assert!(pp.sub(&p).l2_norm() / p.l2_norm() < 1e-12);
        // div-free part of a pure gradient is zero
        let grad = random_divfree(g, 5, &mut rng).div(); // zero scalar, sanity
        assert!(grad.l2_norm() < 1e-12);
    }
}
