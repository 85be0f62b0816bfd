//! Exact symbolic verification of the nine parameter conditions that make
//! every error term in the iteration small.
//!
//! The construction is driven by a single large base `λ` and an
//! intermittency exponent `γ`; every concrete knob is a power of `λ`:
//!
//! ```text
//! σ = λ^{2γ},  κ = λ^{16γ},  ν = λ^{1−8γ},  μ = λ,  ω = λ.
//! ```
//!
//! Each of the nine conditions demands that a product of knob powers is
//! `≤ λ^{−γ}`, i.e. that the total `λ`-exponent of the left-hand side is
//! `≤ −γ`.  The exponents are affine-rational expressions in `(γ, p, r)`,
//! so the verdicts are computed in exact `BigRational` arithmetic — no
//! floating point anywhere near the comparison.  A numeric cross-check
//! re-evaluates the literal product of knob values at sampled `λ` and must
//! agree in sign with the symbolic verdict.
//!
//! The auxiliary exponent `q` is defined by `1/r = 1/2 + 1/q`, so a factor
//! `(νμ)^{−1/q}` appears as `(νμ)^{1/2 − 1/r}`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive};

use crate::error::{EngineError, Result};

/// Names of the nine conditions, in the order they are checked.
pub const CONDITION_NAMES: [&str; 9] = [
    "w_p_linf_lp",
    "w_a_linf_lp",
    "w_a_l2_lq",
    "w_c_l2_lq",
    "lap_error_wp",
    "lap_error_wa",
    "acc_error",
    "osc_error_wp",
    "osc_error_wa",
];

/// One verified condition: its name, the exact `λ`-exponent of the
/// left-hand side, and the verdict against the bound `−γ`.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// Which error term the condition controls.
    pub name: &'static str,
    /// Exact `λ`-exponent of the left-hand side.  For the acceleration
    /// error, whose left-hand side is a *sum* of two knob products, this
    /// is the larger of the two exponents.
    pub exponent: BigRational,
    /// `exponent ≤ −γ`.
    pub pass: bool,
}

impl ConditionReport {
    /// The exponent as a floating-point number (for display only).
    pub fn exponent_f64(&self) -> f64 {
        self.exponent.to_f64().unwrap_or(f64::NAN)
    }
}

/// Full report of [`check_exponents`].
#[derive(Debug, Clone)]
pub struct ExponentReport {
    /// The parameters, exactly as parsed.
    pub gamma: BigRational,
    pub p: BigRational,
    pub r: BigRational,
    /// The nine per-condition verdicts, in [`CONDITION_NAMES`] order.
    pub conditions: Vec<ConditionReport>,
    /// The `λ`-exponent `s_p(2γ+1) − 1 + 20γ` (with `s_p = 1 − 40γ`)
    /// governing the fractional-regularity bound of the perturbation.
    pub regularity_exponent: BigRational,
    /// The regularity exponent `s_p = 1 − 40γ` itself.
    pub s_p: BigRational,
}

impl ExponentReport {
    /// True iff every one of the nine conditions passes.
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    /// The conditions that fail, by name.
    pub fn failing(&self) -> Vec<&'static str> {
        self.conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect()
    }

    /// Re-evaluate every condition numerically at base `lambda`: build the
    /// concrete knob values `σ = λ^{2γ}`, ..., form each left-hand side as
    /// the literal product (or sum of products) from its definition, and
    /// compare against `λ^{−γ}` in floating point.  Returns the failing
    /// condition names if any numeric verdict disagrees with the symbolic
    /// one.
    pub fn numeric_cross_check(&self, lambda: f64) -> Vec<&'static str> {
        let gamma = self.gamma.to_f64().unwrap();
        let p = self.p.to_f64().unwrap();
        let r = self.r.to_f64().unwrap();
        let sigma = lambda.powf(2.0 * gamma);
        let kappa = lambda.powf(16.0 * gamma);
        let nu = lambda.powf(1.0 - 8.0 * gamma);
        let mu = lambda;
        let omega = lambda;
        let nm = nu * mu;
        let lhs = [
            kappa.sqrt() * nm.powf(0.5 - 1.0 / p),
            sigma / omega * kappa.sqrt() * nm.powf(1.0 - 1.0 / p),
            sigma / omega * nm.powf(1.5 - 1.0 / r),
            nu / mu * nm.powf(1.0 - 1.0 / r),
            sigma / kappa.sqrt() * mu * nm.powf(0.5 - 1.0 / r),
            sigma * sigma / omega / kappa.sqrt() * mu * nm.powf(1.0 - 1.0 / r),
            (kappa.sqrt() + omega / sigma * nu) / mu * nm.powf(0.5 - 1.0 / r),
            nm.powf(1.0 - 1.0 / r) / sigma,
            sigma / omega * kappa.sqrt() * nm.powf(1.0 - 1.0 / r),
        ];
        let bound = lambda.powf(-gamma);
        self.conditions
            .iter()
            .zip(lhs)
            .filter(|(c, v)| (*v <= bound) != c.pass)
            .map(|(c, _)| c.name)
            .collect()
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse a decimal string (e.g. `"0.01"`, `"1.5"`, `"-3"`) into an exact
/// rational.  Scientific notation is not accepted: the inputs are
/// hand-chosen parameters, and silent rounding must be impossible.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = match t.split_once('.') {
        Some((a, b)) => (a, b),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(EngineError::InvalidParam(format!(
            "cannot parse '{s}' as a decimal"
        )));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(EngineError::InvalidParam(format!(
            "cannot parse '{s}' as a decimal"
        )));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| {
        EngineError::InvalidParam(format!("cannot parse '{s}' as a decimal"))
    })?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let q = BigRational::new(numer, denom);
    Ok(if neg { -q } else { q })
}

/// Check the nine smallness conditions at exact rational `(γ, p, r)`.
///
/// Requires `γ > 0`, `1 < p < 2`, `r > 1`.  Each condition's left-hand
/// side is a product of knob powers; substituting the `λ`-exponents of the
/// knobs gives an exact rational exponent, and the condition passes iff
/// that exponent is `≤ −γ`.
pub fn check_exponents(
    gamma: &BigRational,
    p: &BigRational,
    r: &BigRational,
) -> Result<ExponentReport> {
    let one = BigRational::one();
    let two = rat(2, 1);
    if !gamma.is_positive() {
        return Err(EngineError::InvalidParam(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if *p <= one || *p >= two {
        return Err(EngineError::InvalidParam(format!(
            "p must lie in the open interval (1, 2), got {p}"
        )));
    }
    if *r <= one {
        return Err(EngineError::InvalidParam(format!(
            "r must exceed 1, got {r}"
        )));
    }

    // λ-exponents of the knobs.
    let e_sigma = &two * gamma; // σ = λ^{2γ}
    let e_kappa = rat(16, 1) * gamma; // κ = λ^{16γ}
    let e_nu = &one - rat(8, 1) * gamma; // ν = λ^{1−8γ}
    let e_mu = one.clone(); // μ = λ
    let e_omega = one.clone(); // ω = λ
    let e_nm = &e_nu + &e_mu; // νμ = λ^{2−8γ}

    let half = rat(1, 2);
    let inv_p = p.recip();
    let inv_r = r.recip();

    let exponents: [BigRational; 9] = [
        // κ^{1/2} (νμ)^{1/2 − 1/p}
        &half * &e_kappa + &e_nm * (&half - &inv_p),
        // ω⁻¹ σ κ^{1/2} (νμ)^{1 − 1/p}
        &e_sigma - &e_omega + &half * &e_kappa + &e_nm * (&one - &inv_p),
        // ω⁻¹ σ (νμ)^{3/2 − 1/r}
        &e_sigma - &e_omega + &e_nm * (rat(3, 2) - &inv_r),
        // ν μ⁻¹ (νμ)^{1 − 1/r}
        &e_nu - &e_mu + &e_nm * (&one - &inv_r),
        // σ κ^{−1/2} μ (νμ)^{1/2 − 1/r}
        &e_sigma - &half * &e_kappa + &e_mu + &e_nm * (&half - &inv_r),
        // ω⁻¹ σ² κ^{−1/2} μ (νμ)^{1 − 1/r}
        &two * &e_sigma - &e_omega - &half * &e_kappa + &e_mu + &e_nm * (&one - &inv_r),
        // (κ^{1/2} + ω σ⁻¹ ν) μ⁻¹ (νμ)^{1/2 − 1/r}: the larger branch wins.
        {
            let tail = -&e_mu + &e_nm * (&half - &inv_r);
            let a = &half * &e_kappa + &tail;
            let b = &e_omega - &e_sigma + &e_nu + &tail;
            a.max(b)
        },
        // σ⁻¹ (νμ)^{1 − 1/r}
        -&e_sigma + &e_nm * (&one - &inv_r),
        // ω⁻¹ σ κ^{1/2} (νμ)^{1 − 1/r}
        &e_sigma - &e_omega + &half * &e_kappa + &e_nm * (&one - &inv_r),
    ];

    let bound = -gamma;
    let conditions = CONDITION_NAMES
        .iter()
        .zip(exponents)
        .map(|(name, exponent)| ConditionReport {
            name,
            pass: exponent <= bound,
            exponent,
        })
        .collect();

    // s_p = 1 − 40γ and the W^{s_p,1} bound exponent s_p(2γ + 1) − 1 + 20γ.
    let s_p = &one - rat(40, 1) * gamma;
    let regularity_exponent = &s_p * (&two * gamma + &one) - &one + rat(20, 1) * gamma;

    Ok(ExponentReport {
        gamma: gamma.clone(),
        p: p.clone(),
        r: r.clone(),
        conditions,
        regularity_exponent,
        s_p,
    })
}

/// Convenience wrapper: parse decimal strings and check.
pub fn check_exponents_str(gamma: &str, p: &str, r: &str) -> Result<ExponentReport> {
    check_exponents(&parse_decimal(gamma)?, &parse_decimal(p)?, &parse_decimal(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dec(s: &str) -> BigRational {
        parse_decimal(s).unwrap()
    }

    #[test]
    fn parse_decimal_exact() {
        assert_eq!(dec("0.01"), rat(1, 100));
        assert_eq!(dec("1.5"), rat(3, 2));
        assert_eq!(dec("-3"), rat(-3, 1));
        assert_eq!(dec("2."), rat(2, 1));
        assert_eq!(dec(".25"), rat(1, 4));
        assert_eq!(dec("1.001"), rat(1001, 1000));
        assert!(parse_decimal("1e-3").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("abc").is_err());
    }

    #[test]
    fn admissible_point_all_pass() {
        // (γ, p, r) = (0.01, 1.5, 1.001): all nine exponents ≤ −0.01.
        let rep = check_exponents_str("0.01", "1.5", "1.001").unwrap();
        assert!(rep.all_pass(), "failing: {:?}", rep.failing());
        // The w^{(p)} oscillation exponent is −2γ + (2−8γ)(1−1/r).
        let expected =
            rat(-2, 100) + (rat(2, 1) - rat(8, 100)) * (rat(1, 1) - rat(1000, 1001));
        let osc = &rep.conditions[7];
        assert_eq!(osc.name, "osc_error_wp");
        assert_eq!(osc.exponent, expected);
        // ≈ −0.0181
        assert!((osc.exponent_f64() + 0.0181).abs() < 1e-4);
    }

    #[test]
    fn inadmissible_r_fails_exactly_three_conditions() {
        // At (0.01, 1.5, 1.01) the w^{(a)} integrability, w^{(p)}
        // Laplacian and w^{(p)} oscillation exponents all land at
        // −1/1010 > −γ; everything else still passes.
        let rep = check_exponents_str("0.01", "1.5", "1.01").unwrap();
        assert!(!rep.all_pass());
        assert_eq!(
            rep.failing(),
            vec!["w_a_l2_lq", "lap_error_wp", "osc_error_wp"]
        );
        let expected = rat(-1, 1010);
        assert_eq!(rep.conditions[2].exponent, expected);
        assert_eq!(rep.conditions[4].exponent, expected);
        assert_eq!(rep.conditions[7].exponent, expected);
    }

    #[test]
    fn r_to_one_limit_bounded_by_minus_two_gamma() {
        // In the r → 1 limit every r-dependent condition (the third
        // through the ninth) has exponent ≤ −2γ for small γ.  The first
        // two conditions do not involve r; they are the γ-smallness
        // conditions and are excluded here.  Since only the precondition
        // r > 1 blocks the boundary, evaluate at r = 1 + ε for tiny ε and
        // allow the O(ε) slack (the |coefficient| of 1/r is < 3).
        for g in ["0.01", "0.001", "0.05"] {
            let gamma = dec(g);
            let eps = rat(1, 1_000_000_000);
            let r = BigRational::one() + &eps;
            let rep = check_exponents(&gamma, &rat(3, 2), &r).unwrap();
            let slack = rat(3, 1) * &eps;
            let bound = rat(-2, 1) * &gamma + slack;
            for c in &rep.conditions[2..] {
                assert!(
                    c.exponent <= bound,
                    "{}: {} > −2γ at γ={}",
                    c.name,
                    c.exponent_f64(),
                    g
                );
            }
        }
    }

    #[test]
    fn regularity_exponent_closed_form() {
        // s_p(2γ+1) − 1 + 20γ = −18γ − 80γ² exactly.
        let rep = check_exponents_str("0.01", "1.5", "1.001").unwrap();
        let g = rat(1, 100);
        let expected = rat(-18, 1) * &g - rat(80, 1) * &g * &g;
        assert_eq!(rep.regularity_exponent, expected);
        assert_eq!(rep.s_p, rat(1, 1) - rat(40, 1) * &g);
        assert!(rep.regularity_exponent.is_negative());
    }

    #[test]
    fn numeric_cross_check_agrees_with_symbolic() {
        for (g, p, r) in [
            ("0.01", "1.5", "1.001"),
            ("0.01", "1.5", "1.01"),
            ("0.02", "1.2", "1.005"),
            ("0.005", "1.9", "1.1"),
        ] {
            let rep = check_exponents_str(g, p, r).unwrap();
            for lambda in [f64::powi(2.0, 10), f64::powi(2.0, 20)] {
                let disagreements = rep.numeric_cross_check(lambda);
                assert!(
                    disagreements.is_empty(),
                    "λ={lambda}, ({g},{p},{r}): {disagreements:?}"
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(check_exponents_str("0", "1.5", "1.1").is_err());
        assert!(check_exponents_str("-0.01", "1.5", "1.1").is_err());
        assert!(check_exponents_str("0.01", "2", "1.1").is_err());
        assert!(check_exponents_str("0.01", "1", "1.1").is_err());
        assert!(check_exponents_str("0.01", "1.5", "1").is_err());
        assert!(check_exponents_str("0.01", "1.5", "0.9").is_err());
    }

    #[test]
    fn acceleration_condition_uses_larger_branch() {
        // For small γ the ωσ⁻¹ν branch dominates κ^{1/2}:
        // 1 − 2γ + 1 − 8γ − 1 + (2−8γ)(1/2 − 1/r) vs 8γ − 1 + same tail.
        let gamma = rat(1, 100);
        let r = rat(1001, 1000);
        let rep = check_exponents(&gamma, &rat(3, 2), &r).unwrap();
        let tail = (rat(2, 1) - rat(8, 1) * &gamma)
            * (rat(1, 2) - r.recip());
        let b = rat(1, 1) - rat(10, 1) * &gamma + &tail;
        assert_eq!(rep.conditions[6].exponent, b);
    }
}
