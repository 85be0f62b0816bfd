//! 1D Gauss-Legendre quadrature and cumulative-integral tables.
//!
//! Used for the temporal profiles (antiderivatives of the master bump to
//! ≤ 1e−12), for L^p-in-time integrals over the nonuniform time grid, and
//! for reference 1D norms of separable jet profiles.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

static NODE_CACHE: Lazy<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss-Legendre nodes and weights on [−1, 1], computed by Newton
/// iteration on the Legendre recurrence and cached per order.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 2);
    let mut cache = NODE_CACHE.lock().unwrap();
    cache
        .entry(order)
        .or_insert_with(|| {
            let n = order;
            let mut nodes = vec![0.0; n];
            let mut weights = vec![0.0; n];
            for i in 0..(n + 1) / 2 {
                // Chebyshev initial guess
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    // Legendre P_n(x) and derivative by recurrence
                    let mut p0 = 1.0;
                    let mut p1 = x;
                    for k in 2..=n {
                        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0)
                            / k as f64;
                        p0 = p1;
                        p1 = pk;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                let w = 2.0 / ((1.0 - x * x) * dp * dp);
                weights[i] = w;
                weights[n - 1 - i] = w;
            }
            (nodes, weights)
        })
        .clone()
}

/// Composite Gauss-Legendre integral of `f` over [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let left = a + p as f64 * h;
        let mid = left + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

/// Cumulative integral table of a smooth function on [a, b]: F(t) = ∫_a^t f.
///
/// Breakpoint values are precomputed with composite Gauss-Legendre;
/// evaluation integrates from the nearest breakpoint, so the error is that
/// of a single high-order panel of width ≤ (b−a)/cells.
#[derive(Clone)]
pub struct CumulativeTable {
    a: f64,
    b: f64,
    cells: usize,
    order: usize,
    /// values[j] = ∫_a^{x_j} f at the j-th breakpoint (0 ≤ j ≤ cells)
    values: Vec<f64>,
    cache_f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CumulativeTable {
    pub fn build(
        f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        a: f64,
        b: f64,
        cells: usize,
        order: usize,
    ) -> Self {
        let mut values = Vec::with_capacity(cells + 1);
        values.push(0.0);
        let h = (b - a) / cells as f64;
        let mut acc = 0.0;
        for j in 0..cells {
            let left = a + j as f64 * h;
            acc += integrate(|x| f(x), left, left + h, 1, order);
            values.push(acc);
        }
        Self { a, b, cells, order, values, cache_f: f }
    }

    /// F(t) = ∫_a^t f for t ∈ [a, b] (clamped).
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.a, self.b);
        let h = (self.b - self.a) / self.cells as f64;
        let j = (((t - self.a) / h).floor() as usize).min(self.cells - 1);
        let left = self.a + j as f64 * h;
        self.values[j] + integrate(|x| (self.cache_f)(x), left, t, 1, self.order)
    }

    /// Total integral over [a, b].
    pub fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }
}
