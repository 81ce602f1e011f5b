//! Symmetric analysis windows of odd length, described by shape and
//! half-length so a window of length `2N + 1` is centered on sample `N`.

/// Window taper shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    Blackman,
    Hamming,
    Hann,
    Rectangular,
}

/// An odd-length symmetric window: `2 * half_length + 1` samples, peak 1 at
/// the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    shape: WindowShape,
    half_length: usize,
}

impl WindowSpec {
    pub fn new(shape: WindowShape, half_length: usize) -> Self {
        Self { shape, half_length }
    }

    /// Window whose total length is the nearest odd sample count to
    /// `span_samples` (at least 3).
    pub fn odd_from_span(shape: WindowShape, span_samples: f64) -> Self {
        let len = nearest_odd(span_samples).max(3);
        Self { shape, half_length: (len - 1) / 2 }
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn half_length(&self) -> usize {
        self.half_length
    }

    pub fn len(&self) -> usize {
        2 * self.half_length + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Window weights indexed by `m + half_length` for `m` in
    /// `[-half_length, half_length]`. Symmetric, nonnegative, peak exactly 1
    /// (normalized by the center sample, where every shape attains its
    /// maximum; the raw cosine sums only approximate 1 in floating point).
    pub fn weights(&self) -> Vec<f64> {
        let n = self.half_length;
        let mut w = Vec::with_capacity(2 * n + 1);
        for m in -(n as i64)..=(n as i64) {
            w.push(self.weight_at(m));
        }
        let peak = w[n];
        for v in &mut w {
            *v /= peak;
        }
        w
    }

    fn weight_at(&self, m: i64) -> f64 {
        if self.half_length == 0 {
            return 1.0;
        }
        let x = m as f64 / self.half_length as f64;
        match self.shape {
            WindowShape::Blackman => {
                0.42 + 0.5 * (std::f64::consts::PI * x).cos()
                    + 0.08 * (2.0 * std::f64::consts::PI * x).cos()
            }
            WindowShape::Hamming => 0.54 + 0.46 * (std::f64::consts::PI * x).cos(),
            WindowShape::Hann => 0.5 + 0.5 * (std::f64::consts::PI * x).cos(),
            WindowShape::Rectangular => 1.0,
        }
        .max(0.0)
    }
}

/// Nearest odd integer to `x` (ties resolve away from zero).
fn nearest_odd(x: f64) -> usize {
    let k = ((x - 1.0) / 2.0).round() as i64;
    (2 * k.max(0) + 1) as usize
}

/// A full-length (non-centered) analysis window of `len` samples, used for
/// framed spectral analysis.
pub(crate) fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| {
            0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_lengths() {
        assert_eq!(WindowSpec::odd_from_span(WindowShape::Blackman, 176.0).len(), 177);
        assert_eq!(WindowSpec::odd_from_span(WindowShape::Blackman, 177.0).len(), 177);
        assert_eq!(WindowSpec::odd_from_span(WindowShape::Blackman, 178.0).len(), 179);
        assert_eq!(WindowSpec::odd_from_span(WindowShape::Blackman, 1.0).len(), 3);
    }

    #[test]
    fn weights_symmetric_nonnegative_peak_one() {
        for shape in [
            WindowShape::Blackman,
            WindowShape::Hamming,
            WindowShape::Hann,
            WindowShape::Rectangular,
        ] {
            let spec = WindowSpec::new(shape, 40);
            let w = spec.weights();
            assert_eq!(w.len(), 81);
            let peak = w.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(peak, 1.0);
            assert_eq!(w[40], 1.0);
            for i in 0..w.len() {
                assert!(w[i] >= 0.0);
                assert_eq!(w[i], w[w.len() - 1 - i], "asymmetric at {i}");
            }
        }
    }

    #[test]
    fn blackman_endpoints_vanish() {
        let w = WindowSpec::new(WindowShape::Blackman, 25).weights();
        assert!(w[0].abs() < 1e-15);
        assert!(w[50].abs() < 1e-15);
    }
}
