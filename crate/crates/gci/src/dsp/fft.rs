//! Thin wrappers over rustfft with a per-thread plan cache.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Inverse transform including the 1/n normalization.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

pub(crate) fn complex_from_real(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Smallest power of two >= n.
pub(crate) fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Linear convolution via FFT, exact length `x.len() + h.len() - 1`.
pub(crate) fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = next_pow2(out_len);
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    for (dst, &s) in a.iter_mut().zip(x) {
        dst.re = s;
    }
    for (dst, &s) in b.iter_mut().zip(h) {
        dst.re = s;
    }
    forward(&mut a);
    forward(&mut b);
    for (av, bv) in a.iter_mut().zip(&b) {
        *av *= bv;
    }
    inverse(&mut a);
    a.truncate(out_len);
    a.into_iter().map(|v| v.re).collect()
}
