//! Reading and writing 16-bit mono PCM WAV files.
//!
//! Samples map to `f64` in [-1, 1) on read (dividing by 32768); writing
//! clamps to [-1, 1] and rounds. Any other channel count, bit depth, or
//! sample format is refused with a descriptive error rather than being
//! converted silently.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Waveform;

const FULL_SCALE: f64 = 32768.0;

fn format_error(path: &Path, detail: String) -> Error {
    Error::WavFormat { path: path.to_path_buf(), detail }
}

fn hound_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(source) => Error::Io { path: path.to_path_buf(), source },
        other => format_error(path, other.to_string()),
    }
}

/// Read a 16-bit mono PCM WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| hound_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format_error(path, format!("{} channels", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(format_error(
            path,
            format!("{}-bit {:?} samples", spec.bits_per_sample, spec.sample_format),
        ));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / FULL_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| hound_error(path, e))?;
    Waveform::new(samples, f64::from(spec.sample_rate))
}

/// Write a waveform as a 16-bit mono PCM WAV file, clamping to full scale.
pub fn write_wav(path: impl AsRef<Path>, x: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let rate = x.sample_rate_hz();
    if rate.fract() != 0.0 || rate > f64::from(u32::MAX) {
        return Err(Error::InvalidConfig(format!(
            "cannot store sample rate {rate} Hz in a WAV header"
        )));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| hound_error(path, e))?;
    for &s in x.samples() {
        let v = ((s.clamp(-1.0, 1.0) * FULL_SCALE).round() as i32).clamp(-32768, 32767) as i16;
        writer.write_sample(v).map_err(|e| hound_error(path, e))?;
    }
    writer.finalize().map_err(|e| hound_error(path, e))?;
    Ok(())
}
