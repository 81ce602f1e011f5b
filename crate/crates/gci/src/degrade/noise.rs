//! Additive noise at a controlled segmental signal-to-noise ratio.
//!
//! The noise track — white Gaussian or an external recording — is scaled
//! by one global gain chosen in closed form so that the *mean per-frame*
//! SNR equals the request, silence included. A single gain keeps the
//! noise stationary; per-frame gains would imprint the speech envelope
//! onto the noise.

use std::path::PathBuf;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::wav::read_wav;

/// Default segmental-SNR frame length in milliseconds.
pub const DEFAULT_FRAME_MS: f64 = 32.0;

/// Where the noise track comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// Zero-mean unit-variance Gaussian samples from a seeded generator.
    WhiteGaussian,
    /// A recording (16-bit mono PCM WAV), resampled to the signal's rate
    /// and tiled with a seeded circular offset when shorter than it.
    File(PathBuf),
}

/// A noise degradation request.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Target mean segmental SNR in dB.
    pub snr_db: f64,
    /// Frame length for the segmental computation.
    pub frame_ms: f64,
    /// Seed for the noise samples and the circular offset.
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(snr_db: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::WhiteGaussian, snr_db, frame_ms: DEFAULT_FRAME_MS, seed }
    }

    pub fn from_file(path: impl Into<PathBuf>, snr_db: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::File(path.into()), snr_db, frame_ms: DEFAULT_FRAME_MS, seed }
    }

    fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig(format!("SNR must be finite, got {}", self.snr_db)));
        }
        if !(self.frame_ms.is_finite() && self.frame_ms > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frame length must be positive, got {} ms",
                self.frame_ms
            )));
        }
        Ok(())
    }
}

/// Build the unscaled noise track, exactly `len` samples at `rate`.
fn noise_track(spec: &NoiseSpec, len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    match &spec.kind {
        NoiseKind::WhiteGaussian => {
            Ok((0..len).map(|_| rng.sample(rand_distr::StandardNormal)).collect())
        }
        NoiseKind::File(path) => {
            let file = read_wav(path)?;
            let file = crate::dsp::resample::resample(&file, rate)?;
            if file.is_empty() || file.samples().iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "noise file {} is silent",
                    path.display()
                )));
            }
            let src = file.samples();
            let offset = rng.gen_range(0..src.len());
            Ok((0..len).map(|i| src[(offset + i) % src.len()]).collect())
        }
    }
}

/// Per-frame signal-to-noise ratios in dB over non-overlapping frames
/// (the trailing partial frame included). Frames where either track has
/// exactly zero energy carry no finite ratio and are skipped.
fn segmental_ratios_db(signal: &[f64], noise: &[f64], frame: usize) -> Vec<f64> {
    signal
        .chunks(frame)
        .zip(noise.chunks(frame))
        .filter_map(|(s, n)| {
            let es: f64 = s.iter().map(|v| v * v).sum();
            let en: f64 = n.iter().map(|v| v * v).sum();
            (es > 0.0 && en > 0.0).then(|| 10.0 * (es / en).log10())
        })
        .collect()
}

/// Mean segmental SNR in dB between a clean signal and an already-scaled
/// noise track, frame policy as in [`add_noise`].
pub fn segmental_snr_db(signal: &Waveform, noise: &[f64], frame_ms: f64) -> Result<f64> {
    let frame = (signal.ms_to_samples(frame_ms).round() as usize).max(1);
    let ratios = segmental_ratios_db(signal.samples(), noise, frame);
    if ratios.is_empty() {
        return Err(Error::NoUsableFrames);
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Add noise to `x` so the mean segmental SNR equals `spec.snr_db`.
///
/// Deterministic for a given seed. The gain solves the target exactly:
/// scaling the noise by g shifts every per-frame ratio by the same
/// −20·log₁₀(g), so the mean lands on the request in one step.
pub fn add_noise(x: &Waveform, spec: &NoiseSpec) -> Result<Waveform> {
    spec.validate()?;
    if x.samples().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = noise_track(spec, x.len(), x.sample_rate_hz(), &mut rng)?;
    let mean_db = segmental_snr_db(x, &noise, spec.frame_ms)?;
    let gain = 10f64.powf((mean_db - spec.snr_db) / 20.0);
    let out = x
        .samples()
        .iter()
        .zip(&noise)
        .map(|(&s, &n)| s + gain * n)
        .collect();
    Waveform::new(out, x.sample_rate_hz())
}
