//! Periodic fields on T² with exact spectral calculus.
//!
//! A field is stored by its Fourier coefficients together with a *bandwidth
//! bound*: the guarantee that every active frequency m satisfies
//! max(|m₁|,|m₂|) ≤ bw.  Binary products are evaluated on a grid large
//! enough to hold the sum of the operand bandwidths, so products of
//! band-limited fields are exact trigonometric polynomials and every
//! subsequent spectral identity holds to machine precision.
//!
//! Fields are immutable: every operation returns a new field.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{EngineError, Result};
use crate::fft;
use crate::grid::{next_pow2, Grid};

/// Hard cap on grid sizes the library will allocate on its own when growing
/// grids for exact products or dilations.
pub const MAX_GRID: usize = 1 << 14;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Scalar field on the torus.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    bw: usize,
    hat: Array2<Complex64>,
}

impl ScalarField {
    /// Sample `f(x₁,x₂)` on the grid.  The bandwidth bound is the grid
    /// Nyquist; use [`ScalarField::truncated`] to declare a smaller one.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.n();
        let values = Array2::from_shape_fn((n, n), |(i, j)| {
            f(i as f64 / n as f64, j as f64 / n as f64)
        });
        Self::from_values(grid, &values)
    }

    /// Build from real samples.
    pub fn from_values(grid: Grid, values: &Array2<f64>) -> Self {
        assert_eq!(values.nrows(), grid.n());
        let hat = fft::coeffs_from_values(values);
        Self { grid, bw: grid.nyquist(), hat }
    }

    /// Build from spectral coefficients with an explicit bandwidth bound.
    pub fn from_coeffs(grid: Grid, hat: Array2<Complex64>, bw: usize) -> Self {
        assert_eq!(hat.nrows(), grid.n());
        assert!(bw <= grid.nyquist());
        Self { grid, bw, hat }
    }

    /// The zero field.
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, bw: 0, hat: Array2::zeros((grid.n(), grid.n())) }
    }

    /// A constant field.
    pub fn constant(grid: Grid, c: f64) -> Self {
        let mut hat = Array2::zeros((grid.n(), grid.n()));
        hat[[0, 0]] = Complex64::new(c, 0.0);
        Self { grid, bw: 0, hat }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Declared bandwidth bound.
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn hat(&self) -> &Array2<Complex64> {
        &self.hat
    }

    /// Real samples on the grid.
    pub fn values(&self) -> Array2<f64> {
        fft::values_from_coeffs(&self.hat)
    }

    /// Spatial mean ∮ f.
    pub fn mean(&self) -> f64 {
        self.hat[[0, 0]].re
    }

    /// Subtract the mean.
    pub fn zero_mean(&self) -> Self {
        let mut hat = self.hat.clone();
        hat[[0, 0]] = Complex64::default();
        Self { grid: self.grid, bw: self.bw, hat }
    }

    /// Apply a real multiplier φ(m) in spectral space.
    pub fn spectral_multiplier(&self, phi: impl Fn(i64, i64) -> f64) -> Self {
        let n = self.grid.n();
        let mut hat = self.hat.clone();
        for ((a, b), v) in hat.indexed_iter_mut() {
            let m1 = self.grid.freq(a);
            let m2 = self.grid.freq(b);
            *v *= phi(m1, m2);
        }
        let _ = n;
        Self { grid: self.grid, bw: self.bw, hat }
    }

    /// Spectral derivative ∂₁^{α₁}∂₂^{α₂}.
    pub fn derivative(&self, alpha: [u32; 2]) -> Self {
        let n = self.grid.n();
        let mut hat = self.hat.clone();
        for ((a, b), v) in hat.indexed_iter_mut() {
            let m1 = self.grid.freq(a) as f64;
            let m2 = self.grid.freq(b) as f64;
            let mut factor = Complex64::new(1.0, 0.0);
            for _ in 0..alpha[0] {
                factor *= Complex64::new(0.0, TWO_PI * m1);
            }
            for _ in 0..alpha[1] {
                factor *= Complex64::new(0.0, TWO_PI * m2);
            }
            *v *= factor;
        }
        let _ = n;
        Self { grid: self.grid, bw: self.bw, hat }
    }

    pub fn dx(&self) -> Self {
        self.derivative([1, 0])
    }

    pub fn dy(&self) -> Self {
        self.derivative([0, 1])
    }

    /// Δf.
    pub fn laplacian(&self) -> Self {
        self.spectral_multiplier(|m1, m2| {
            -(TWO_PI * TWO_PI) * ((m1 * m1 + m2 * m2) as f64)
        })
    }

    /// Zero-mean v with Δv = f − ∮f.
    pub fn inv_laplacian(&self) -> Self {
        let mut out = self.spectral_multiplier(|m1, m2| {
            let q = (m1 * m1 + m2 * m2) as f64;
            if q == 0.0 {
                0.0
            } else {
                -1.0 / (TWO_PI * TWO_PI * q)
            }
        });
        out.hat[[0, 0]] = Complex64::default();
        out
    }

    /// ∇f as a vector field.
    pub fn grad(&self) -> VectorField {
        VectorField::from_comps(self.dx(), self.dy())
    }

    /// ∇⊥f = (−∂₂f, ∂₁f).
    pub fn grad_perp(&self) -> VectorField {
        VectorField::from_comps(self.dy().scaled(-1.0), self.dx())
    }

    /// Multiply by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, bw: self.bw, hat: self.hat.mapv(|z| z * c) }
    }

    /// Hard band-limit to `bw`, returning the new field and the relative
    /// L² mass of the discarded tail.
    pub fn truncated(&self, bw: usize) -> (Self, f64) {
        let mut hat = self.hat.clone();
        let mut kept = 0.0;
        let mut cut = 0.0;
        for ((a, b), v) in hat.indexed_iter_mut() {
            let m1 = self.grid.freq(a).unsigned_abs() as usize;
            let m2 = self.grid.freq(b).unsigned_abs() as usize;
            if m1 > bw || m2 > bw {
                cut += v.norm_sqr();
                *v = Complex64::default();
            } else {
                kept += v.norm_sqr();
            }
        }
        let total = kept + cut;
        let tail = if total > 0.0 { (cut / total).sqrt() } else { 0.0 };
        (Self { grid: self.grid, bw: bw.min(self.grid.nyquist()), hat }, tail)
    }

    /// Move to a grid of size `m` (lossless when m/2 > bandwidth; rejected
    /// otherwise).
    pub fn resampled(&self, m: usize) -> Result<Self> {
        if m / 2 <= self.bw {
            return Err(EngineError::Aliasing(format!(
                "cannot place bandwidth {} on grid {}",
                self.bw, m
            )));
        }
        let grid = self.grid.with_n(m)?;
        Ok(Self { grid, bw: self.bw, hat: fft::resample_spectral(&self.hat, m) })
    }

    /// Composition with Φ(x) = σx + s: mode m moves to σm and picks up the
    /// phase e^{2πi m·s}.  The result lives on a grid just large enough.
    pub fn dilate_shift(&self, sigma: usize, shift: [f64; 2]) -> Result<Self> {
        let bw_out = sigma * self.bw;
        let n_out = next_pow2(2 * bw_out + 2).max(self.grid.n());
        if n_out > MAX_GRID {
            return Err(EngineError::Aliasing(format!(
                "dilation by {sigma} needs grid {n_out} > cap {MAX_GRID}"
            )));
        }
        let grid = self.grid.with_n(n_out)?;
        let mut hat = Array2::<Complex64>::zeros((n_out, n_out));
        let n = self.grid.n();
        for ((a, b), &c) in self.hat.indexed_iter() {
            if c == Complex64::default() {
                continue;
            }
            let m1 = fft::freq_of(a, n);
            let m2 = fft::freq_of(b, n);
            if m1.unsigned_abs() as usize > self.bw || m2.unsigned_abs() as usize > self.bw {
                continue;
            }
            let phase = TWO_PI * (m1 as f64 * shift[0] + m2 as f64 * shift[1]);
            let rot = Complex64::new(phase.cos(), phase.sin());
            let a_out = (sigma as i64 * m1).rem_euclid(n_out as i64) as usize;
            let b_out = (sigma as i64 * m2).rem_euclid(n_out as i64) as usize;
            hat[[a_out, b_out]] = c * rot;
        }
        Ok(Self { grid, bw: bw_out, hat })
    }

    /// Exact product of two band-limited fields (computed on a grid that
    /// holds the full bandwidth sum; no aliasing, no truncation).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let bw_out = self.bw + other.bw;
        let n_out = next_pow2(2 * bw_out + 2);
        if n_out > MAX_GRID {
            return Err(EngineError::Aliasing(format!(
                "product bandwidth {bw_out} needs grid {n_out} > cap {MAX_GRID}"
            )));
        }
        let a = self.on_grid(n_out)?;
        let b = other.on_grid(n_out)?;
        let prod = &a.values() * &b.values();
        let grid = self.grid.with_n(n_out)?;
        let hat = fft::coeffs_from_values(&prod);
        let field = Self { grid, bw: grid.nyquist(), hat };
        // the true bandwidth is bw_out; zero the (roundoff-dust) remainder
        let (field, _) = field.truncated(bw_out.min(grid.nyquist()));
        Ok(field)
    }

    /// Lossless view on a (possibly different) grid size.
    fn on_grid(&self, m: usize) -> Result<Self> {
        if m == self.grid.n() {
            Ok(self.clone())
        } else {
            self.resampled(m)
        }
    }

    /// Pair of fields moved to a common grid (the larger of the two).
    fn aligned(&self, other: &Self) -> (Self, Self) {
        let m = self.grid.n().max(other.grid.n());
        (
            self.on_grid(m).expect("upcast is lossless"),
            other.on_grid(m).expect("upcast is lossless"),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        ScalarField {
            grid: a.grid,
            bw: a.bw.max(b.bw),
            hat: a.hat + &b.hat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// L² norm via Parseval (exact for band-limited fields).
    pub fn l2_norm(&self) -> f64 {
        self.hat.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// L^p norm by rectangle rule on the oversampled grid (p ≥ 1).
    pub fn lp_norm(&self, p: f64) -> f64 {
        crate::norms::lp_of(&[self], &[1.0], p, self.grid.oversample())
    }

    /// Sup norm as the max over the oversampled grid.
    pub fn linf_norm(&self) -> f64 {
        crate::norms::linf_of(&[self], &[1.0], self.grid.oversample())
    }

    /// Max over the oversampled grid of |∇f| plus |f| (C¹ norm surrogate).
    pub fn c1_norm(&self) -> f64 {
        let gx = self.dx();
        let gy = self.dy();
        self.linf_norm()
            + crate::norms::linf_of(&[&gx, &gy], &[1.0, 1.0], self.grid.oversample())
    }
}

/// Vector field on the torus (two scalar components on a shared grid).
#[derive(Debug, Clone)]
pub struct VectorField {
    comps: [ScalarField; 2],
}

impl VectorField {
    pub fn from_comps(x: ScalarField, y: ScalarField) -> Self {
        let (x, y) = x.aligned(&y);
        Self { comps: [x, y] }
    }

    pub fn from_fns(
        grid: Grid,
        fx: impl Fn(f64, f64) -> f64 + Sync,
        fy: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Self {
        Self::from_comps(ScalarField::from_fn(grid, fx), ScalarField::from_fn(grid, fy))
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { comps: [ScalarField::zeros(grid), ScalarField::zeros(grid)] }
    }

    pub fn grid(&self) -> Grid {
        self.comps[0].grid()
    }

    pub fn bandwidth(&self) -> usize {
        self.comps[0].bandwidth().max(self.comps[1].bandwidth())
    }

    pub fn x(&self) -> &ScalarField {
        &self.comps[0]
    }

    pub fn y(&self) -> &ScalarField {
        &self.comps[1]
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.comps[0].mean(), self.comps[1].mean()]
    }

    pub fn zero_mean(&self) -> Self {
        Self::from_comps(self.comps[0].zero_mean(), self.comps[1].zero_mean())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_comps(self.comps[0].scaled(c), self.comps[1].scaled(c))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_comps(
            self.comps[0].add(&other.comps[0]),
            self.comps[1].add(&other.comps[1]),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Pointwise scalar multiple a·v (exact padded product).
    pub fn mul_scalar(&self, a: &ScalarField) -> Result<Self> {
        Ok(Self::from_comps(self.comps[0].mul(a)?, self.comps[1].mul(a)?))
    }

    /// div v = ∂₁v₁ + ∂₂v₂.
    pub fn div(&self) -> ScalarField {
        self.comps[0].dx().add(&self.comps[1].dy())
    }

    /// Scalar curl ∂₁v₂ − ∂₂v₁.
    pub fn curl(&self) -> ScalarField {
        self.comps[1].dx().sub(&self.comps[0].dy())
    }

    pub fn laplacian(&self) -> Self {
        Self::from_comps(self.comps[0].laplacian(), self.comps[1].laplacian())
    }

    /// Pointwise dot product (exact padded product).
    pub fn dot(&self, other: &Self) -> Result<ScalarField> {
        Ok(self.comps[0]
            .mul(&other.comps[0])?
            .add(&self.comps[1].mul(&other.comps[1])?))
    }

    /// Leray decomposition v = Pv + Qv with Qv = ∇Δ⁻¹div v + ∮v.
    pub fn leray(&self) -> (Self, Self) {
        let potential = self.div().inv_laplacian();
        let mut q = potential.grad();
        let m = self.mean();
        q = Self::from_comps(
            q.comps[0].add(&ScalarField::constant(self.grid(), m[0])),
            q.comps[1].add(&ScalarField::constant(self.grid(), m[1])),
        );
        let p = self.sub(&q);
        (p, q)
    }

    /// Divergence-free part only.
    pub fn leray_p(&self) -> Self {
        self.leray().0
    }

    /// Composition with Φ(x) = σx + s applied to both components.
    pub fn dilate_shift(&self, sigma: usize, shift: [f64; 2]) -> Result<Self> {
        Ok(Self::from_comps(
            self.comps[0].dilate_shift(sigma, shift)?,
            self.comps[1].dilate_shift(sigma, shift)?,
        ))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.comps[0].l2_norm().powi(2) + self.comps[1].l2_norm().powi(2)).sqrt()
    }

    /// L^p norm of the pointwise magnitude |v|.
    pub fn lp_norm(&self, p: f64) -> f64 {
        crate::norms::lp_of(
            &[&self.comps[0], &self.comps[1]],
            &[1.0, 1.0],
            p,
            self.grid().oversample(),
        )
    }

    pub fn linf_norm(&self) -> f64 {
        crate::norms::linf_of(
            &[&self.comps[0], &self.comps[1]],
            &[1.0, 1.0],
            self.grid().oversample(),
        )
    }
}

/// Symmetric 2×2 tensor field (independent entries xx, xy, yy).
#[derive(Debug, Clone)]
pub struct SymTensorField {
    xx: ScalarField,
    xy: ScalarField,
    yy: ScalarField,
}

impl SymTensorField {
    pub fn from_comps(xx: ScalarField, xy: ScalarField, yy: ScalarField) -> Self {
        let (xx, xy) = xx.aligned(&xy);
        let (xx, yy) = xx.aligned(&yy);
        let (xy, yy) = xy.aligned(&yy);
        let (xx, _) = xx.aligned(&yy);
        Self { xx, xy, yy }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            xx: ScalarField::zeros(grid),
            xy: ScalarField::zeros(grid),
            yy: ScalarField::zeros(grid),
        }
    }

    /// Constant tensor field.
    pub fn constant(grid: Grid, xx: f64, xy: f64, yy: f64) -> Self {
        Self {
            xx: ScalarField::constant(grid, xx),
            xy: ScalarField::constant(grid, xy),
            yy: ScalarField::constant(grid, yy),
        }
    }

    pub fn grid(&self) -> Grid {
        self.xx.grid()
    }

    pub fn bandwidth(&self) -> usize {
        self.xx
            .bandwidth()
            .max(self.xy.bandwidth())
            .max(self.yy.bandwidth())
    }

    pub fn xx(&self) -> &ScalarField {
        &self.xx
    }

    pub fn xy(&self) -> &ScalarField {
        &self.xy
    }

    pub fn yy(&self) -> &ScalarField {
        &self.yy
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.xx.mean(), self.xy.mean(), self.yy.mean()]
    }

    pub fn zero_mean(&self) -> Self {
        Self {
            xx: self.xx.zero_mean(),
            xy: self.xy.zero_mean(),
            yy: self.yy.zero_mean(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            xx: self.xx.scaled(c),
            xy: self.xy.scaled(c),
            yy: self.yy.scaled(c),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_comps(
            self.xx.add(&other.xx),
            self.xy.add(&other.xy),
            self.yy.add(&other.yy),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Pointwise scalar multiple a·T (exact padded products).
    pub fn mul_scalar(&self, a: &ScalarField) -> Result<Self> {
        Ok(Self::from_comps(
            self.xx.mul(a)?,
            self.xy.mul(a)?,
            self.yy.mul(a)?,
        ))
    }

    /// Row l of the tensor as a vector field.
    pub fn row(&self, l: usize) -> VectorField {
        match l {
            0 => VectorField::from_comps(self.xx.clone(), self.xy.clone()),
            1 => VectorField::from_comps(self.xy.clone(), self.yy.clone()),
            _ => panic!("row index out of range"),
        }
    }

    /// (div T)_i = ∂_j T_ij.
    pub fn div(&self) -> VectorField {
        VectorField::from_comps(
            self.xx.dx().add(&self.xy.dy()),
            self.xy.dx().add(&self.yy.dy()),
        )
    }

    /// Pointwise matrix-vector product (T v)_i = T_ij v_j.
    pub fn apply(&self, v: &VectorField) -> Result<VectorField> {
        Ok(VectorField::from_comps(
            self.xx.mul(v.x())?.add(&self.xy.mul(v.y())?),
            self.xy.mul(v.x())?.add(&self.yy.mul(v.y())?),
        ))
    }

    pub fn trace(&self) -> ScalarField {
        self.xx.add(&self.yy)
    }

    /// Traceless part T − (tr T/2)·Id.
    pub fn deviatoric(&self) -> Self {
        let half_tr = self.trace().scaled(0.5);
        Self::from_comps(self.xx.sub(&half_tr), self.xy.clone(), self.yy.sub(&half_tr))
    }

    /// Relative size of the pointwise trace (0 for traceless fields).
    pub fn traceless_defect(&self) -> f64 {
        let tr = self.trace().l2_norm();
        let scale = self.frobenius_l2();
        if scale == 0.0 {
            tr
        } else {
            tr / scale
        }
    }

    /// L² norm of the pointwise Frobenius magnitude.
    pub fn frobenius_l2(&self) -> f64 {
        (self.xx.l2_norm().powi(2)
            + 2.0 * self.xy.l2_norm().powi(2)
            + self.yy.l2_norm().powi(2))
        .sqrt()
    }

    /// L^p norm of the pointwise Frobenius magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        crate::norms::lp_of(
            &[&self.xx, &self.xy, &self.yy],
            &[1.0, 2.0, 1.0],
            p,
            self.grid().oversample(),
        )
    }

    pub fn linf_norm(&self) -> f64 {
        crate::norms::linf_of(
            &[&self.xx, &self.xy, &self.yy],
            &[1.0, 2.0, 1.0],
            self.grid().oversample(),
        )
    }

    /// Symmetric outer product v ⊗ v.
    pub fn outer_self(v: &VectorField) -> Result<Self> {
        Ok(Self::from_comps(
            v.x().mul(v.x())?,
            v.x().mul(v.y())?,
            v.y().mul(v.y())?,
        ))
    }

    /// Symmetrized outer product (a⊗b + b⊗a)/2.
    pub fn sym_outer(a: &VectorField, b: &VectorField) -> Result<Self> {
        let xy = a
            .x()
            .mul(b.y())?
            .add(&a.y().mul(b.x())?)
            .scaled(0.5);
        Ok(Self::from_comps(a.x().mul(b.x())?, xy, a.y().mul(b.y())?))
    }
}

/// div(a ⊗ b), i.e. the vector ∂_j(a_i b_j), computed with exact products.
pub fn div_outer(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    let t00 = a.x().mul(b.x())?;
    let t01 = a.x().mul(b.y())?;
    let t10 = a.y().mul(b.x())?;
    let t11 = a.y().mul(b.y())?;
    Ok(VectorField::from_comps(
        t00.dx().add(&t01.dy()),
        t10.dx().add(&t11.dy()),
    ))
}

/// Deterministic random band-limited scalar field (zero mean), used by the
/// operator identity suites.
pub fn random_scalar(grid: Grid, bw: usize, rng: &mut impl Rng) -> ScalarField {
    let n = grid.n();
    let mut hat = Array2::<Complex64>::zeros((n, n));
    let b = bw as i64;
    for m1 in -b..=b {
        for m2 in -b..=b {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            // fill each conjugate pair once
            if m1 < 0 || (m1 == 0 && m2 < 0) {
                continue;
            }
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            let c = Complex64::new(re, im);
            hat[[grid.index_of(m1), grid.index_of(m2)]] = c;
            hat[[grid.index_of(-m1), grid.index_of(-m2)]] = c.conj();
        }
    }
    ScalarField::from_coeffs(grid, hat, bw)
}

/// Deterministic random band-limited vector field.
pub fn random_vector(grid: Grid, bw: usize, rng: &mut impl Rng) -> VectorField {
    VectorField::from_comps(random_scalar(grid, bw, rng), random_scalar(grid, bw, rng))
}

/// Deterministic random band-limited divergence-free vector field.
pub fn random_divfree(grid: Grid, bw: usize, rng: &mut impl Rng) -> VectorField {
    random_scalar(grid, bw, rng).grad_perp()
}

/// Deterministic random band-limited symmetric traceless tensor field with
/// zero mean.
pub fn random_sym_traceless(grid: Grid, bw: usize, rng: &mut impl Rng) -> SymTensorField {
    let a = random_scalar(grid, bw, rng);
    let b = random_scalar(grid, bw, rng);
    SymTensorField::from_comps(a.clone(), b, a.scaled(-1.0))
}
