//! Hilbert-envelope detector.
//!
//! The Hilbert envelope of the linear-prediction residual forms a smooth
//! positive pulse around each glottal closure. A windowed center-of-gravity
//! signal computed over that envelope swings through zero (negative-going)
//! at each pulse center, giving one instant per cycle.

use crate::dsp::hilbert::hilbert_envelope;
use crate::dsp::lpc::{lp_residual, LpcConfig};
use crate::dsp::zerocross::{zero_crossings, CrossingDirection};
use crate::error::{Error, Result};
use crate::signal::{GciSequence, PitchPrior, Waveform};
use crate::window::{WindowShape, WindowSpec};

/// Tuning for the Hilbert-envelope detector.
#[derive(Debug, Clone, Copy)]
pub struct HeConfig {
    /// Center-of-gravity window span as a multiple of the mean period.
    pub window_factor: f64,
    /// Crossings closer than this fraction of the mean period are merged.
    pub merge_factor: f64,
    /// Coarse grid spacing `2^levels` for the fast variant.
    pub coarse_levels: u32,
}

impl Default for HeConfig {
    fn default() -> Self {
        Self { window_factor: 1.1, merge_factor: 0.2, coarse_levels: 4 }
    }
}

/// Windowed center-of-gravity of a nonnegative envelope, with a mask of
/// samples where the window saw (numerically) no energy.
#[derive(Debug, Clone)]
pub struct CogSignal {
    values: Vec<f64>,
    inert: Vec<bool>,
}

impl CogSignal {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True where the denominator fell below the energy guard; such samples
    /// hold 0 but carry no phase information and produce no crossings.
    pub fn inert(&self) -> &[bool] {
        &self.inert
    }
}

/// Center-of-gravity signal over `envelope` with the given window:
/// at each sample the energy-weighted mean offset of the envelope inside
/// the window, in samples. Window truncation at the edges is implicit in
/// the sums. The result is invariant to positive scaling of the envelope.
pub fn cog_signal(envelope: &Waveform, window: &WindowSpec) -> CogSignal {
    let env = envelope.samples();
    let w = window.weights();
    let half = window.half_length() as i64;
    let n = env.len();
    let max_env = env.iter().cloned().fold(0.0_f64, f64::max);
    let guard = 1e-12 * max_env;
    let mut values = vec![0.0; n];
    let mut inert = vec![false; n];
    for i in 0..n {
        let (num, den) = cog_sums(env, &w, half, i);
        if den <= guard {
            inert[i] = true;
        } else {
            values[i] = num / den;
        }
    }
    CogSignal { values, inert }
}

#[inline]
fn cog_sums(env: &[f64], w: &[f64], half: i64, i: usize) -> (f64, f64) {
    let n = env.len() as i64;
    let i = i as i64;
    let lo = (-half).max(-i);
    let hi = half.min(n - 1 - i);
    let mut num = 0.0;
    let mut den = 0.0;
    for m in lo..=hi {
        let we = w[(m + half) as usize] * env[(i + m) as usize];
        num += m as f64 * we;
        den += we;
    }
    (num, den)
}

/// Negative-going crossings of the center-of-gravity signal, excluding any
/// whose bracketing samples include inert ones.
fn cog_crossings(cog: &CogSignal) -> Vec<f64> {
    zero_crossings(&cog.values, CrossingDirection::NegativeGoing)
        .into_iter()
        .filter(|&t| {
            let i = t.floor() as usize;
            !cog.inert[i] && !cog.inert[(i + 1).min(cog.inert.len() - 1)]
        })
        .collect()
}

/// Merge crossings closer than `min_gap`, keeping in each cluster the one
/// with the most local envelope energy.
fn merge_close(crossings: Vec<f64>, env: &[f64], min_gap: f64, energy_half: usize) -> Vec<f64> {
    let local_energy = |t: f64| -> f64 {
        let c = t.round() as i64;
        let lo = (c - energy_half as i64).max(0) as usize;
        let hi = ((c + energy_half as i64) as usize).min(env.len().saturating_sub(1));
        env[lo..=hi].iter().map(|v| v * v).sum()
    };
    let mut out: Vec<f64> = Vec::with_capacity(crossings.len());
    for t in crossings {
        match out.last() {
            Some(&prev) if t - prev < min_gap => {
                if local_energy(t) > local_energy(prev) {
                    *out.last_mut().unwrap() = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

/// Detect GCIs with the Hilbert-envelope method. Inputs shorter than one
/// analysis frame yield an empty sequence.
pub fn detect_he(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_he_with(x, prior, &HeConfig::default())
}

pub fn detect_he_with(x: &Waveform, prior: &PitchPrior, cfg: &HeConfig) -> Result<GciSequence> {
    let lpc = LpcConfig::for_rate(x.sample_rate_hz());
    let residual = match lp_residual(x, &lpc) {
        Ok(r) => r,
        Err(Error::TooShort { .. }) => return Ok(GciSequence::empty(METHOD)),
        Err(e) => return Err(e),
    };
    let env = hilbert_envelope(&residual);
    let window = cog_window(prior, cfg);
    let cog = cog_signal(&env, &window);
    let crossings = cog_crossings(&cog);
    Ok(finish(crossings, &env, prior, cfg))
}

/// Fast variant: the center-of-gravity signal is evaluated on a coarse grid
/// of spacing `2^levels` and crossings are then localized by bisection,
/// evaluating only O(levels) extra samples per cycle.
pub fn detect_he_fast(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_he_fast_with(x, prior, &HeConfig::default())
}

pub fn detect_he_fast_with(
    x: &Waveform,
    prior: &PitchPrior,
    cfg: &HeConfig,
) -> Result<GciSequence> {
    let lpc = LpcConfig::for_rate(x.sample_rate_hz());
    let residual = match lp_residual(x, &lpc) {
        Ok(r) => r,
        Err(Error::TooShort { .. }) => return Ok(GciSequence::empty(METHOD_FAST)),
        Err(e) => return Err(e),
    };
    let env = hilbert_envelope(&residual);
    let window = cog_window(prior, cfg);
    let w = window.weights();
    let half = window.half_length() as i64;
    let envs = env.samples();
    let n = envs.len();
    let max_env = envs.iter().cloned().fold(0.0_f64, f64::max);
    let guard = 1e-12 * max_env;
    // A single-sample evaluation of the center-of-gravity signal.
    let eval = |i: usize| -> Option<f64> {
        let (num, den) = cog_sums(envs, &w, half, i);
        (den > guard).then(|| num / den)
    };
    let step = 1usize << cfg.coarse_levels;
    let mut crossings = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    let mut i = 0;
    while i < n {
        if let Some(v) = eval(i) {
            if let Some((pi, pv)) = prev {
                if pv > 0.0 && v <= 0.0 {
                    // Bisect down to adjacent samples.
                    let (mut lo, mut lv, mut hi, mut hv) = (pi, pv, i, v);
                    while hi - lo > 1 {
                        let mid = (lo + hi) / 2;
                        match eval(mid) {
                            Some(mv) if mv > 0.0 => {
                                lo = mid;
                                lv = mv;
                            }
                            Some(mv) => {
                                hi = mid;
                                hv = mv;
                            }
                            None => break,
                        }
                    }
                    if hi - lo == 1 && lv > 0.0 && hv <= 0.0 {
                        crossings.push(lo as f64 + lv / (lv - hv));
                    }
                }
            }
            prev = Some((i, v));
        } else {
            prev = None;
        }
        i += step;
    }
    Ok(finish_named(crossings, envs, prior, cfg, METHOD_FAST))
}

const METHOD: &str = "he";
const METHOD_FAST: &str = "fast-he";

fn cog_window(prior: &PitchPrior, cfg: &HeConfig) -> WindowSpec {
    WindowSpec::odd_from_span(
        WindowShape::Blackman,
        cfg.window_factor * prior.mean_period_samples(),
    )
}

fn finish(crossings: Vec<f64>, env: &Waveform, prior: &PitchPrior, cfg: &HeConfig) -> GciSequence {
    finish_named(crossings, env.samples(), prior, cfg, METHOD)
}

fn finish_named(
    crossings: Vec<f64>,
    env: &[f64],
    prior: &PitchPrior,
    cfg: &HeConfig,
    name: &str,
) -> GciSequence {
    let min_gap = cfg.merge_factor * prior.mean_period_samples();
    let energy_half = (0.1 * prior.mean_period_samples()).round() as usize;
    let merged = merge_close(crossings, env, min_gap, energy_half);
    GciSequence::from_sorted(name, merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_voice, VoiceSpec};

    fn toy_envelope() -> Waveform {
        // Two clean envelope pulses at 100 and 260.
        let mut e = vec![0.0; 400];
        for (c, a) in [(100i64, 1.0), (260i64, 0.8)] {
            for i in 0..400i64 {
                let d = (i - c) as f64;
                e[i as usize] += a * (-d * d / 50.0).exp();
            }
        }
        Waveform::new(e, 16_000.0).unwrap()
    }

    #[test]
    fn cog_crosses_zero_at_pulse_centers() {
        let env = toy_envelope();
        let w = WindowSpec::odd_from_span(WindowShape::Blackman, 176.0);
        let cog = cog_signal(&env, &w);
        let crossings = cog_crossings(&cog);
        assert_eq!(crossings.len(), 2, "crossings: {crossings:?}");
        assert!((crossings[0] - 100.0).abs() < 2.0);
        assert!((crossings[1] - 260.0).abs() < 3.0);
    }

    #[test]
    fn cog_signal_invariant_to_envelope_scale() {
        let env = toy_envelope();
        let w = WindowSpec::odd_from_span(WindowShape::Blackman, 176.0);
        let base = cog_signal(&env, &w);
        for log2 in [-8i32, -2, 3, 9] {
            let s = (2.0f64).powi(log2);
            let scaled = env.with_samples(env.samples().iter().map(|v| v * s).collect());
            let got = cog_signal(&scaled, &w);
            // Numerator and denominator scale by the same power of two, so
            // the quotient is bit-identical.
            assert_eq!(got.values(), base.values(), "scale 2^{log2}");
            assert_eq!(got.inert(), base.inert());
        }
    }

    #[test]
    fn silent_regions_are_inert_and_produce_no_crossings() {
        let mut e = vec![0.0; 600];
        for i in 0..600i64 {
            let d = (i - 100) as f64;
            e[i as usize] += (-d * d / 50.0).exp();
        }
        // Samples far from the pulse see essentially zero energy.
        let env = Waveform::new(e, 16_000.0).unwrap();
        let w = WindowSpec::odd_from_span(WindowShape::Blackman, 60.0);
        let cog = cog_signal(&env, &w);
        assert!(cog.inert()[500..].iter().all(|&b| b));
        let crossings = cog_crossings(&cog);
        assert_eq!(crossings.len(), 1);
    }

    #[test]
    fn merge_keeps_crossing_with_larger_local_energy() {
        let mut env = vec![0.0; 200];
        env[40] = 1.0;
        env[52] = 3.0;
        let merged = merge_close(vec![40.0, 52.0, 120.0], &env, 20.0, 4);
        assert_eq!(merged, vec![52.0, 120.0]);
    }

    #[test]
    fn detects_most_epochs_on_synthetic_voice() {
        let spec = VoiceSpec::new(120.0, 1.0, 7);
        let voice = synthesize_voice(&spec);
        let prior = PitchPrior::from_f0_hz(120.0, 16_000.0).unwrap();
        let got = detect_he(&voice.speech, &prior).unwrap();
        let n_true = voice.epochs.instants().len();
        assert!(
            (got.instants().len() as i64 - n_true as i64).abs() <= n_true as i64 / 10,
            "expected ~{n_true} detections, got {}",
            got.instants().len()
        );
    }

    #[test]
    fn fast_variant_matches_full_detector() {
        let spec = VoiceSpec::new(140.0, 0.8, 11);
        let voice = synthesize_voice(&spec);
        let prior = PitchPrior::from_f0_hz(140.0, 16_000.0).unwrap();
        let full = detect_he(&voice.speech, &prior).unwrap();
        let fast = detect_he_fast(&voice.speech, &prior).unwrap();
        assert!(!full.instants().is_empty());
        let matched = fast
            .instants()
            .iter()
            .filter(|&&t| {
                full.instants().iter().any(|&u| (u - t).abs() <= 1.0)
            })
            .count();
        let frac = matched as f64 / full.instants().len() as f64;
        assert!(frac >= 0.9, "fast/full agreement {frac:.3}");
    }
}
