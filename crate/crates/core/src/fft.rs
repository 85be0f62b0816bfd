//! Thin 2D FFT layer over `rustfft` plus the streaming oversampled
//! quadrature used for L^p norms.
//!
//! Conventions: a field with samples v[i][j] = f(i/n, j/n) has spectral
//! coefficients c_m with f(x) = Σ_m c_m e^{2πi m·x}; the forward transform
//! divides by n², the inverse is the plain unnormalized DFT sum.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

static PLANS: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Fetch (or build and cache) a 1D plan of the given length.
pub fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// In-place FFT of every row (axis 1) of a standard-layout array.
fn fft_rows(data: &mut Array2<Complex64>, inverse: bool) {
    let len = data.ncols();
    let fft = plan(len, inverse);
    let slice = data.as_slice_mut().expect("standard layout required");
    slice.par_chunks_mut(len).for_each_init(
        || vec![Complex64::default(); fft.get_inplace_scratch_len()],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// Out-of-place transpose into standard layout.
fn transposed(data: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = Array2::<Complex64>::zeros((data.ncols(), data.nrows()));
    for ((i, j), v) in data.indexed_iter() {
        out[[j, i]] = *v;
    }
    out
}

/// Full 2D FFT (both axes), unnormalized.
fn fft2(data: Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
    let mut a = data;
    fft_rows(&mut a, inverse);
    let mut b = transposed(&a);
    fft_rows(&mut b, inverse);
    transposed(&b)
}

/// Fourier coefficients of a real sample array (normalized by 1/n²).
pub fn coeffs_from_values(values: &Array2<f64>) -> Array2<Complex64> {
    let n = values.nrows();
    let scale = 1.0 / (n * n) as f64;
    let complex = values.mapv(|v| Complex64::new(v * scale, 0.0));
    fft2(complex, false)
}

/// Real samples from Fourier coefficients (imaginary residue discarded;
/// the caller guarantees Hermitian symmetry up to roundoff).
pub fn values_from_coeffs(hat: &Array2<Complex64>) -> Array2<f64> {
    fft2(hat.clone(), true).mapv(|z| z.re)
}

/// Signed frequency for index `a` on an axis of length `n`.
#[inline]
pub fn freq_of(a: usize, n: usize) -> i64 {
    if a <= n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

/// Re-embed an n×n spectral array into an m×m one carrying the same
/// coefficients (m ≥ n: zero padding; m < n: the caller must have checked
/// that discarded entries vanish).
pub fn resample_spectral(hat: &Array2<Complex64>, m: usize) -> Array2<Complex64> {
    let n = hat.nrows();
    let mut out = Array2::<Complex64>::zeros((m, m));
    let half = n.min(m) / 2;
    for (a_out, a_in) in index_pairs(n, m, half) {
        for (b_out, b_in) in index_pairs(n, m, half) {
            out[[a_out, b_out]] = hat[[a_in, b_in]];
        }
    }
    out
}

/// Pairs of (destination, source) indices covering frequencies |f| ≤ half.
fn index_pairs(n: usize, m: usize, half: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(2 * half + 1);
    for f in -(half as i64)..=(half as i64) {
        v.push((f.rem_euclid(m as i64) as usize, f.rem_euclid(n as i64) as usize));
    }
    v
}

/// Zero-pad a 1D spectral row of length n to length big (big ≥ n).
fn pad_row(row: &[Complex64], big: usize, out: &mut [Complex64]) {
    let n = row.len();
    out.iter_mut().for_each(|z| *z = Complex64::default());
    for (a, &c) in row.iter().enumerate() {
        let f = freq_of(a, n);
        out[f.rem_euclid(big as i64) as usize] = c;
    }
}

/// Streaming rectangle-rule reduction over the oversampled grid.
///
/// Evaluates each spectral component on the (os·n)² grid without ever
/// materializing it, feeding `point_fn` the component values at each point,
/// and returns the mean of `point_fn` over the grid.  Row partial sums are
/// accumulated in parallel but combined in a fixed order, so the result is
/// independent of scheduling.
pub fn quadrature_mean(
    comps: &[&Array2<Complex64>],
    os: usize,
    point_fn: impl Fn(&[f64]) -> f64 + Sync,
) -> f64 {
    let n = comps[0].nrows();
    let big = n * os;

    // Stage 1: oversample axis 0.  For each component build a (big × n)
    // array whose row i is the axis-1 spectrum of the field at x₁ = i/big.
    let stage: Vec<Array2<Complex64>> = comps
        .iter()
        .map(|hat| {
            // transpose so rows run over the axis-0 frequency, pad, inverse FFT
            let t = transposed(hat);
            let fft = plan(big, true);
            let mut padded = Array2::<Complex64>::zeros((n, big));
            padded
                .as_slice_mut()
                .unwrap()
                .par_chunks_mut(big)
                .zip(t.as_slice().unwrap().par_chunks(n))
                .for_each_init(
                    || vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    |scratch, (dst, src)| {
                        pad_row(src, big, dst);
                        fft.process_with_scratch(dst, scratch);
                    },
                );
            // back to (big × n): row i = spectrum over axis 1 at sample i
            transposed(&padded)
        })
        .collect();

    // Stage 2: per output row, oversample axis 1 and accumulate.
    let fft = plan(big, true);
    let row_sums: Vec<f64> = (0..big)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![vec![Complex64::default(); big]; comps.len()],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    vec![0.0f64; comps.len()],
                )
            },
            |(bufs, scratch, vals), i| {
                for (c, st) in stage.iter().enumerate() {
                    let src = st.row(i);
                    pad_row(src.as_slice().unwrap(), big, &mut bufs[c]);
                    fft.process_with_scratch(&mut bufs[c], scratch);
                }
                let mut acc = 0.0;
                for j in 0..big {
                    for c in 0..comps.len() {
                        vals[c] = bufs[c][j].re;
                    }
                    acc += point_fn(vals);
                }
                acc
            },
        )
        .collect();

    row_sums.iter().sum::<f64>() / (big * big) as f64
}

/// Streaming maximum of `point_fn` over the oversampled grid.
pub fn quadrature_max(
    comps: &[&Array2<Complex64>],
    os: usize,
    point_fn: impl Fn(&[f64]) -> f64 + Sync,
) -> f64 {
    // Reuse the mean machinery by tracking max per row.
    let n = comps[0].nrows();
    let big = n * os;
    let stage: Vec<Array2<Complex64>> = comps
        .iter()
        .map(|hat| {
            let t = transposed(hat);
            let fft = plan(big, true);
            let mut padded = Array2::<Complex64>::zeros((n, big));
            padded
                .as_slice_mut()
                .unwrap()
                .par_chunks_mut(big)
                .zip(t.as_slice().unwrap().par_chunks(n))
                .for_each_init(
                    || vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    |scratch, (dst, src)| {
                        pad_row(src, big, dst);
                        fft.process_with_scratch(dst, scratch);
                    },
                );
            transposed(&padded)
        })
        .collect();

    let fft = plan(big, true);
    let row_maxes: Vec<f64> = (0..big)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![vec![Complex64::default(); big]; comps.len()],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    vec![0.0f64; comps.len()],
                )
            },
            |(bufs, scratch, vals), i| {
                for (c, st) in stage.iter().enumerate() {
                    let src = st.row(i);
                    pad_row(src.as_slice().unwrap(), big, &mut bufs[c]);
                    fft.process_with_scratch(&mut bufs[c], scratch);
                }
                let mut m = f64::NEG_INFINITY;
                for j in 0..big {
                    for c in 0..comps.len() {
                        vals[c] = bufs[c][j].re;
                    }
                    m = m.max(point_fn(vals));
                }
                m
            },
        )
        .collect();

    row_maxes.into_iter().fold(f64::NEG_INFINITY, f64::max)
}
