//! Directional zero crossings with linear sub-sample interpolation.

/// Crossing direction, by the sign of the slope through zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    /// From strictly positive to zero-or-negative.
    NegativeGoing,
    /// From strictly negative to zero-or-positive.
    PositiveGoing,
}

/// Fractional indices where `x` crosses zero in the given direction.
///
/// A crossing between samples `i` and `i+1` is located by linear
/// interpolation at `i + x[i] / (x[i] - x[i+1])`. The strict-sign
/// convention means a constant-zero stretch produces no crossings, and
/// `zero_crossings(-x, NegativeGoing)` mirrors
/// `zero_crossings(x, PositiveGoing)` exactly, bit for bit.
pub fn zero_crossings(x: &[f64], direction: CrossingDirection) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        let (a, b) = (x[i], x[i + 1]);
        let crossing = match direction {
            CrossingDirection::NegativeGoing => a > 0.0 && b <= 0.0,
            CrossingDirection::PositiveGoing => a < 0.0 && b >= 0.0,
        };
        if crossing {
            out.push(i as f64 + a / (a - b));
        }
    }
    out
}
