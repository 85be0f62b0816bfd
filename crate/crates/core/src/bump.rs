//! The master smooth bump and derived profiles.
//!
//! `bump(u) = exp(−1/(1−u²))` on |u| < 1, zero outside — C^∞ with compact
//! support.  All spatial bumps, the temporal master profile G, and the
//! smoothstep used by the cutoffs χ and θ are built from it.

use once_cell::sync::Lazy;

use crate::quad::{integrate, CumulativeTable};

/// exp(−1/(1−u²)) for |u| < 1, else 0.
#[inline]
pub fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// First derivative of `bump`.
#[inline]
pub fn bump_deriv(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let d = 1.0 - u * u;
        bump(u) * (-2.0 * u / (d * d))
    } else {
        0.0
    }
}

/// ∫_{−1}^{1} bump² du, to quadrature precision.
pub fn bump_sq_integral() -> f64 {
    static V: Lazy<f64> = Lazy::new(|| integrate(|u| bump(u) * bump(u), -1.0, 1.0, 200, 16));
    *V
}

/// L²(R) norm of bump.
pub fn bump_l2() -> f64 {
    bump_sq_integral().sqrt()
}

/// L²(R) norm of bump′.
pub fn bump_deriv_l2() -> f64 {
    static V: Lazy<f64> =
        Lazy::new(|| integrate(|u| bump_deriv(u) * bump_deriv(u), -1.0, 1.0, 400, 16).sqrt());
    *V
}

/// L^p(R) norm of bump (1D reference quadrature for separable jet oracles).
pub fn bump_lp(p: f64) -> f64 {
    integrate(|u| bump(u).powf(p), -1.0, 1.0, 400, 16).powf(1.0 / p)
}

/// L^p(R) norm of bump′.
pub fn bump_deriv_lp(p: f64) -> f64 {
    integrate(|u| bump_deriv(u).abs().powf(p), -1.0, 1.0, 400, 16).powf(1.0 / p)
}

/// C^∞ monotone smoothstep: 0 for u ≤ 0, 1 for u ≥ 1, built as the
/// normalized antiderivative of exp(−1/(v(1−v))).
pub fn smoothstep(u: f64) -> f64 {
    static TABLE: Lazy<(CumulativeTable, f64)> = Lazy::new(|| {
        let f = std::sync::Arc::new(|v: f64| {
            if v <= 0.0 || v >= 1.0 {
                0.0
            } else {
                (-1.0 / (v * (1.0 - v))).exp()
            }
        });
        let tbl = CumulativeTable::build(f, 0.0, 1.0, 256, 16);
        let total = tbl.total();
        (tbl, total)
    });
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        TABLE.0.eval(u) / TABLE.1
    }
}
