//! Zero-frequency resonator detector.
//!
//! The differenced speech signal is passed twice through a resonator with a
//! double pole at zero frequency. The impulse-like excitation at each glottal
//! closure leaves a discontinuity that survives the heavy low-pass action of
//! the resonator, while everything else is smeared into a slow polynomial
//! trend. Subtracting a local mean three times removes that trend, and the
//! positive-going zero crossings of what remains mark the closure instants.
//!
//! All stages are linear, so the detector's intermediate signal is (up to
//! floating-point roundoff) a linear function of the input.

use crate::dsp::zerocross::{zero_crossings, CrossingDirection};
use crate::error::{Error, Result};
use crate::signal::{GciSequence, PitchPrior, Waveform};

/// Tuning for the zero-frequency resonator detector.
#[derive(Debug, Clone, Copy)]
pub struct ZfrConfig {
    /// Trend-removal window span as a multiple of the mean period.
    pub trend_window_factor: f64,
    /// Length of independently processed blocks, in seconds.
    pub block_s: f64,
    /// Use the recursion `y(n) = x(n) + 2y(n-1) + y(n-2)` instead of the
    /// resonator `y(n) = x(n) + 2y(n-1) - y(n-2)`. The plus-sign recursion
    /// has a root outside the unit circle and diverges on any realistic
    /// input; it is provided so the difference can be demonstrated.
    pub unstable_recursion: bool,
}

impl Default for ZfrConfig {
    fn default() -> Self {
        Self { trend_window_factor: 1.5, block_s: 1.0, unstable_recursion: false }
    }
}

/// Local-mean subtractions applied after the resonator cascade. Three passes
/// annihilate the cubic drift introduced by the four integrator poles exactly
/// (in exact arithmetic) wherever the averaging window fits entirely inside
/// the block, which is what makes independent block processing possible.
const TREND_PASSES: usize = 3;

fn difference(s: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(s.len());
    let mut prev = 0.0;
    for &v in s {
        x.push(v - prev);
        prev = v;
    }
    x
}

/// One pass of `y(n) = x(n) + 2 y(n-1) + sign * y(n-2)` from zero state.
fn resonate_once(x: &[f64], sign: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let (mut y1, mut y2) = (0.0_f64, 0.0_f64);
    for &v in x {
        let yi = v + 2.0 * y1 + sign * y2;
        y.push(yi);
        y2 = y1;
        y1 = yi;
    }
    y
}

/// Subtract a centered moving average of half-width `half`; the window is
/// truncated at the block edges and renormalized to the samples it covers.
///
/// Sums are formed directly per sample rather than from running prefix sums:
/// the resonator output reaches magnitudes around 1e11, where a prefix sum
/// over a one-second block would round to absolute errors far larger than
/// the trend-removed signal itself.
fn remove_trend(y: &[f64], half: usize) -> Vec<f64> {
    let n = y.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let mean = y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        out.push(y[i] - mean);
    }
    out
}

/// Resonator cascade plus trend removal on one contiguous slice.
fn zfr_block(x: &[f64], half: usize, sign: f64) -> Vec<f64> {
    let y = resonate_once(&resonate_once(x, sign), sign);
    let mut z = y;
    for _ in 0..TREND_PASSES {
        z = remove_trend(&z, half);
    }
    z
}

fn trend_half(x: &Waveform, prior: &PitchPrior, cfg: &ZfrConfig) -> usize {
    let span = cfg.trend_window_factor * prior.mean_period_samples();
    ((span / 2.0).round() as usize).max(1).min(x.samples().len().saturating_sub(1).max(1))
}

/// Width of the region at each signal edge where the cubic drift cannot be
/// fully annihilated (the averaging windows are truncated there), leaving
/// residue orders of magnitude above the useful oscillation.
pub fn edge_margin(x: &Waveform, prior: &PitchPrior, cfg: &ZfrConfig) -> usize {
    3 * (2 * trend_half(x, prior, cfg) + 1)
}

/// The trend-removed resonator output for the whole signal.
///
/// Long signals are processed in overlapping blocks: each block is filtered
/// independently from zero state, the first and last three trend windows —
/// where the zero state and the truncated averaging windows leave their
/// mark — are discarded or faded, and the remainder is blended with a
/// linear crossfade. Inside the faded region consecutive blocks agree to
/// floating-point precision, so the blend only smooths roundoff.
pub fn zfr_signal(x: &Waveform, prior: &PitchPrior, cfg: &ZfrConfig) -> Result<Waveform> {
    let sign = if cfg.unstable_recursion { 1.0 } else { -1.0 };
    let diffed = difference(x.samples());
    let n = diffed.len();
    let half = trend_half(x, prior, cfg);
    let margin = 3 * (2 * half + 1);
    let core = ((cfg.block_s * x.sample_rate_hz()).round() as usize).max(margin);
    let out = if n <= core + 2 * margin {
        zfr_block(&diffed, half, sign)
    } else {
        let mut acc = vec![0.0_f64; n];
        let mut wsum = vec![0.0_f64; n];
        let mut a = 0usize;
        while a < n {
            let b = (a + core).min(n);
            let ext_lo = a.saturating_sub(2 * margin);
            let ext_hi = (b + 2 * margin).min(n);
            let z = zfr_block(&diffed[ext_lo..ext_hi], half, sign);
            let valid_lo = if ext_lo == 0 { 0 } else { ext_lo + margin };
            let valid_hi = if ext_hi == n { n } else { ext_hi - margin };
            for t in valid_lo..valid_hi {
                let mut w = 1.0_f64;
                if ext_lo != 0 {
                    w = w.min((t - valid_lo + 1) as f64 / margin as f64);
                }
                if ext_hi != n {
                    w = w.min((valid_hi - t) as f64 / margin as f64);
                }
                acc[t] += w * z[t - ext_lo];
                wsum[t] += w;
            }
            a = b;
        }
        acc.iter().zip(&wsum).map(|(v, w)| v / w).collect()
    };
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { what: "zero-frequency resonator output".into() });
    }
    Ok(x.with_samples(out))
}

/// Detect GCIs as the positive-going zero crossings of the trend-removed
/// resonator output. Crossings inside the edge margin — where the output is
/// dominated by unannihilated drift — are discarded.
pub fn detect_zfr(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_zfr_with(x, prior, &ZfrConfig::default())
}

pub fn detect_zfr_with(x: &Waveform, prior: &PitchPrior, cfg: &ZfrConfig) -> Result<GciSequence> {
    let z = zfr_signal(x, prior, cfg)?;
    let margin = edge_margin(x, prior, cfg) as f64;
    let hi = x.samples().len() as f64 - margin;
    let crossings = zero_crossings(z.samples(), CrossingDirection::PositiveGoing)
        .into_iter()
        .filter(|&t| t >= margin && t < hi)
        .collect();
    Ok(GciSequence::from_sorted("zfr", crossings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_voice, VoiceSpec};

    fn sine(f: f64, n: usize, fs: f64) -> Waveform {
        let s = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin())
            .collect();
        Waveform::new(s, fs).unwrap()
    }

    #[test]
    fn sinusoid_yields_evenly_spaced_crossings() {
        let fs = 16_000.0;
        let x = sine(125.0, 8000, fs);
        let prior = PitchPrior::from_f0_hz(125.0, fs).unwrap();
        let got = detect_zfr(&x, &prior).unwrap();
        let inst = got.instants();
        assert!(inst.len() > 40, "got {} crossings", inst.len());
        // Skip the edges, check interior spacing against the true period.
        let period = fs / 125.0;
        for w in inst[5..inst.len() - 5].windows(2) {
            assert!((w[1] - w[0] - period).abs() < 1.0, "spacing {}", w[1] - w[0]);
        }
    }

    #[test]
    fn stage_is_linear_in_the_input() {
        let fs = 16_000.0;
        let prior = PitchPrior::from_f0_hz(100.0, fs).unwrap();
        let cfg = ZfrConfig::default();
        let a = sine(103.0, 12_000, fs);
        let b = sine(241.0, 12_000, fs);
        let za = zfr_signal(&a, &prior, &cfg).unwrap();
        let zb = zfr_signal(&b, &prior, &cfg).unwrap();
        let mixed = a.with_samples(
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(u, v)| 0.7 * u - 1.3 * v)
                .collect(),
        );
        let zm = zfr_signal(&mixed, &prior, &cfg).unwrap();
        let peak = zm.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = zm
            .samples()
            .iter()
            .zip(za.samples().iter().zip(zb.samples()))
            .map(|(m, (u, v))| (m - (0.7 * u - 1.3 * v)).abs())
            .fold(0.0_f64, f64::max);
        assert!(err / peak < 1e-9, "relative deviation {}", err / peak);
    }

    #[test]
    fn block_processing_matches_single_pass() {
        // Compare inside the edge margin only: at the signal edges both
        // paths produce (different) unannihilated drift, orders of magnitude
        // above the useful oscillation, and neither is meaningful.
        let spec = VoiceSpec::new(110.0, 2.5, 3);
        let voice = synthesize_voice(&spec);
        let prior = PitchPrior::from_f0_hz(110.0, 16_000.0).unwrap();
        let small_blocks = ZfrConfig { block_s: 0.3, ..ZfrConfig::default() };
        let one_block = ZfrConfig { block_s: 1e9, ..ZfrConfig::default() };
        let za = zfr_signal(&voice.speech, &prior, &small_blocks).unwrap();
        let zb = zfr_signal(&voice.speech, &prior, &one_block).unwrap();
        let margin = edge_margin(&voice.speech, &prior, &one_block);
        let interior = margin..voice.speech.samples().len() - margin;
        let peak = zb.samples()[interior.clone()]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = za.samples()[interior.clone()]
            .iter()
            .zip(&zb.samples()[interior])
            .map(|(u, v)| (u - v).abs())
            .fold(0.0_f64, f64::max);
        // The recursion's output grows without bound, so the blockwise
        // trend-removal residue scales with the magnitude the resonator
        // reached (~1e12 over these 2.5 s); measured agreement is ~1e-6
        // of the peak, asserted with headroom.
        assert!(err / peak < 3e-6, "relative deviation {}", err / peak);
    }

    #[test]
    fn printed_plus_sign_recursion_diverges() {
        let x = sine(125.0, 4000, 16_000.0);
        let prior = PitchPrior::from_f0_hz(125.0, 16_000.0).unwrap();
        let cfg = ZfrConfig { unstable_recursion: true, ..ZfrConfig::default() };
        match zfr_signal(&x, &prior, &cfg) {
            Err(Error::NonFinite { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn crossings_land_near_true_epochs() {
        let spec = VoiceSpec::new(150.0, 1.0, 21);
        let voice = synthesize_voice(&spec);
        let prior = PitchPrior::from_f0_hz(150.0, 16_000.0).unwrap();
        let got = detect_zfr(&voice.speech, &prior).unwrap();
        let truth = voice.epochs.instants();
        let n_matched = truth
            .iter()
            .filter(|&&t| got.instants().iter().any(|&u| (u - t).abs() <= 32.0))
            .count();
        assert!(
            n_matched as f64 >= 0.9 * truth.len() as f64,
            "matched {n_matched} of {}",
            truth.len()
        );
    }
}
