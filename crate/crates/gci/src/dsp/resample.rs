//! Arbitrary-ratio sample-rate conversion by Kaiser-windowed sinc
//! interpolation.
//!
//! Each output sample is an interpolation of the input at a continuous
//! time position. When downsampling, the sinc cutoff is lowered to the
//! output Nyquist so the kernel doubles as the anti-alias filter.

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Zero crossings of the sinc kernel on each side of its center.
const HALF_CROSSINGS: usize = 16;
/// Kaiser window shape parameter; trades main-lobe width for sidelobe
/// suppression (around -100 dB at this value).
const KAISER_BETA: f64 = 10.0;

/// Zeroth-order modified Bessel function of the first kind, by its power
/// series. Converges in a few dozen terms for the argument range the
/// Kaiser window uses.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn kaiser(fraction: f64) -> f64 {
    let t = 1.0 - fraction * fraction;
    if t <= 0.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * t.sqrt()) / bessel_i0(KAISER_BETA)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resample `x` to `target_rate_hz`, treating the signal as zero outside
/// its extent. The output holds `round(len * target / source)` samples.
pub fn resample(x: &Waveform, target_rate_hz: f64) -> Result<Waveform> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(Error::InvalidSampleRate(target_rate_hz));
    }
    let source_rate = x.sample_rate_hz();
    if (target_rate_hz - source_rate).abs() < 1e-9 * source_rate {
        return Ok(x.clone());
    }
    let ratio = target_rate_hz / source_rate;
    let out_len = (x.len() as f64 * ratio).round() as usize;
    if x.is_empty() || out_len == 0 {
        return Waveform::new(Vec::new(), target_rate_hz);
    }

    // Cutoff relative to the source rate: full band when upsampling, the
    // target Nyquist when downsampling.
    let cutoff = ratio.min(1.0);
    let half_width = HALF_CROSSINGS as f64 / cutoff;
    let samples = x.samples();
    let out = (0..out_len)
        .map(|i| {
            let center = i as f64 / ratio;
            let lo = ((center - half_width).ceil().max(0.0)) as usize;
            let hi = (((center + half_width).floor()) as usize).min(samples.len() - 1);
            let mut acc = 0.0;
            for (k, &s) in samples.iter().enumerate().take(hi + 1).skip(lo) {
                let dt = center - k as f64;
                acc += s * cutoff * sinc(cutoff * dt) * kaiser(dt / half_width);
            }
            acc
        })
        .collect();
    Waveform::new(out, target_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| (2.0 * std::f64::consts::PI * freq * n as f64 / rate).sin())
            .collect()
    }

    #[test]
    fn same_rate_is_a_clone() {
        let x = Waveform::new(tone(440.0, 16000.0, 400), 16000.0).unwrap();
        let y = resample(&x, 16000.0).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn output_length_follows_the_rate_ratio() {
        let x = Waveform::new(vec![0.0; 1000], 16000.0).unwrap();
        assert_eq!(resample(&x, 8000.0).unwrap().len(), 500);
        assert_eq!(resample(&x, 48000.0).unwrap().len(), 3000);
        assert_eq!(resample(&x, 44100.0).unwrap().len(), 2756);
    }

    #[test]
    fn upsampled_tone_matches_the_analytic_waveform() {
        let x = Waveform::new(tone(440.0, 8000.0, 2000), 8000.0).unwrap();
        let y = resample(&x, 16000.0).unwrap();
        let guard = 4 * HALF_CROSSINGS;
        let worst = y
            .samples()
            .iter()
            .enumerate()
            .skip(guard)
            .take(y.len() - 2 * guard)
            .map(|(n, &v)| {
                let want = (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 16000.0).sin();
                (v - want).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "worst interior error {worst}");
    }

    #[test]
    fn downsampling_rejects_content_above_the_new_nyquist() {
        let x = Waveform::new(tone(6000.0, 16000.0, 4000), 16000.0).unwrap();
        let y = resample(&x, 8000.0).unwrap();
        let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        let out = rms(&y.samples()[100..y.len() - 100]);
        assert!(out < 0.01 * rms(x.samples()), "leaked rms {out}");
    }

    #[test]
    fn in_band_content_round_trips_through_a_higher_rate() {
        let n = 4000;
        let mix: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / 16000.0;
                (2.0 * std::f64::consts::PI * 320.0 * t).sin()
                    + 0.5 * (2.0 * std::f64::consts::PI * 1730.0 * t).cos()
                    + 0.25 * (2.0 * std::f64::consts::PI * 2950.0 * t).sin()
            })
            .collect();
        let x = Waveform::new(mix, 16000.0).unwrap();
        let up = resample(&x, 48000.0).unwrap();
        let back = resample(&up, 16000.0).unwrap();
        assert_eq!(back.len(), x.len());
        let guard = 4 * HALF_CROSSINGS;
        let worst = x.samples()[guard..x.len() - guard]
            .iter()
            .zip(&back.samples()[guard..])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "round-trip error {worst}");
    }

    #[test]
    fn bad_target_rate_is_refused() {
        let x = Waveform::new(vec![0.0; 10], 16000.0).unwrap();
        assert!(matches!(resample(&x, 0.0), Err(Error::InvalidSampleRate(_))));
        assert!(matches!(resample(&x, f64::NAN), Err(Error::InvalidSampleRate(_))));
    }
}
