//! Hilbert envelope via the analytic signal.

use rustfft::num_complex::Complex64;

use crate::dsp::fft;
use crate::signal::Waveform;

/// Inputs longer than this are processed in overlapping blocks; a single
/// FFT of tens of millions of points costs more memory and time than the
/// block path, and envelope edge effects die out within a few hundred
/// samples.
const BLOCK_THRESHOLD: usize = 1 << 22;
const BLOCK_LEN: usize = 1 << 21;

/// Magnitude of the analytic signal: the instantaneous amplitude of `x`.
pub fn hilbert_envelope(x: &Waveform) -> Waveform {
    if x.len() > BLOCK_THRESHOLD {
        hilbert_envelope_blocked(x, BLOCK_LEN)
    } else {
        x.with_samples(envelope_direct(x.samples()))
    }
}

fn envelope_direct(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return x.iter().map(|v| v.abs()).collect();
    }
    let mut buf = fft::complex_from_real(x);
    fft::forward(&mut buf);
    // Analytic-signal spectrum: double positive frequencies, zero negative
    // ones, keep DC and (for even n) Nyquist.
    let half = n / 2;
    for k in 1..buf.len() {
        if k < half || (k == half && n % 2 == 1) {
            buf[k] *= 2.0;
        } else if k > half {
            buf[k] = Complex64::new(0.0, 0.0);
        } else if n % 2 == 0 && k == half {
            // Nyquist bin stays as is.
        }
    }
    fft::inverse(&mut buf);
    buf.into_iter().map(|v| v.norm()).collect()
}

/// Block path: 50% overlapped blocks, each block contributing its central
/// half (edges keep the full block output).
pub(crate) fn hilbert_envelope_blocked(x: &Waveform, block_len: usize) -> Waveform {
    let n = x.len();
    let block_len = block_len.min(n).max(4);
    let hop = block_len / 2;
    let quarter = block_len / 4;
    let mut out = vec![0.0; n];
    let mut start = 0;
    loop {
        let end = (start + block_len).min(n);
        let seg = envelope_direct(&x.samples()[start..end]);
        // Region of `out` this block is responsible for.
        let keep_from = if start == 0 { 0 } else { start + quarter };
        let keep_to = if end == n { n } else { start + block_len - quarter };
        for i in keep_from..keep_to {
            out[i] = seg[i - start];
        }
        if end == n {
            break;
        }
        start += hop;
    }
    x.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn am_tone(n: usize, rate: f64) -> (Vec<f64>, Vec<f64>) {
        // Slowly varying positive amplitude times a mid-band carrier.
        let carrier_hz = 2000.0;
        let mod_hz = 30.0;
        let mut x = Vec::with_capacity(n);
        let mut amp = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / rate;
            let a = 1.0 + 0.5 * (2.0 * std::f64::consts::PI * mod_hz * t).sin();
            amp.push(a);
            x.push(a * (2.0 * std::f64::consts::PI * carrier_hz * t).cos());
        }
        (x, amp)
    }

    #[test]
    fn am_tone_envelope_tracks_amplitude() {
        let rate = 16000.0;
        let (x, amp) = am_tone(8192, rate);
        let w = Waveform::new(x, rate).unwrap();
        let env = hilbert_envelope(&w);
        // Judge away from the edges where the analytic signal is clean.
        for i in 500..7692 {
            let rel = (env.samples()[i] - amp[i]).abs() / amp[i];
            assert!(rel < 0.02, "rel err {rel} at {i}");
        }
    }

    #[test]
    fn envelope_of_constant_is_constant() {
        let w = Waveform::new(vec![0.7; 1024], 8000.0).unwrap();
        let env = hilbert_envelope(&w);
        for &v in &env.samples()[10..1014] {
            assert!((v - 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn blocked_path_agrees_with_direct_small_blocks() {
        // Away from the signal edges (where the two paths carry different
        // but equally arbitrary edge transients), the interior error of a
        // block of length B is set by the analytic-signal kernel tail at
        // distance B/4 — measured below 1e-4 for B = 8192 on this input.
        let rate = 16000.0;
        let (x, _) = am_tone(40000, rate);
        let w = Waveform::new(x, rate).unwrap();
        let direct = w.with_samples(envelope_direct(w.samples()));
        let blocked = hilbert_envelope_blocked(&w, 8192);
        let mut worst = 0.0_f64;
        for i in 2048..w.len() - 2048 {
            worst = worst.max((direct.samples()[i] - blocked.samples()[i]).abs());
        }
        assert!(worst < 5e-4, "worst deviation {worst}");
    }

    #[test]
    fn blocked_path_agrees_with_direct_at_production_size() {
        // The two paths differ mainly near the ends of the whole signal,
        // where each carries its own finite-length edge transient; that
        // difference decays like 1/distance (measured: 5.2e-5 at 2048
        // samples in, 1.6e-6 at 65536, the product distance * deviation
        // holding near 0.1).  Deep in the interior only the block-seam
        // residue remains, measured below 4e-7.
        let rate = 16000.0;
        let n = 3 * (1 << 21);
        let (x, _) = am_tone(n, rate);
        let w = Waveform::new(x, rate).unwrap();
        let direct = w.with_samples(envelope_direct(w.samples()));
        let blocked = hilbert_envelope(&w); // n > threshold, takes block path
        let worst = |lo: usize, hi: usize| {
            (lo..hi)
                .map(|i| (direct.samples()[i] - blocked.samples()[i]).abs())
                .fold(0.0_f64, f64::max)
        };
        let near_edges = worst(2048, n - 2048);
        assert!(near_edges < 2e-4, "deviation 2048 samples in: {near_edges}");
        let interior = worst(1 << 18, n - (1 << 18));
        assert!(interior < 2e-6, "interior deviation: {interior}");
    }

    #[test]
    fn short_inputs_fall_back_to_magnitude() {
        let w = Waveform::new(vec![-3.0], 8000.0).unwrap();
        assert_eq!(hilbert_envelope(&w).samples(), &[3.0]);
    }
}
