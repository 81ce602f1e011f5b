//! Core signal containers: sampled waveforms, pitch priors, and instant
//! sequences shared by every detector and the evaluation engine.

use crate::error::{Error, Result};

/// Lowest fundamental frequency the toolkit is designed for.
pub const MIN_F0_HZ: f64 = 50.0;
/// Highest fundamental frequency the toolkit is designed for.
pub const MAX_F0_HZ: f64 = 500.0;

/// A mono sampled signal with its sample rate.
///
/// Samples are `f64` and are checked to be finite on construction; every
/// routine in this crate may assume finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite { what: "waveform" });
        }
        Ok(Self { samples, sample_rate_hz })
    }

    /// Construction for samples already known to be finite (internal
    /// pipeline outputs). Debug builds still verify.
    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self { samples, sample_rate_hz }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn ms_to_samples(&self, ms: f64) -> f64 {
        ms * 1e-3 * self.sample_rate_hz
    }

    /// Same rate, new samples; panics in debug builds on non-finite values.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self::from_parts(samples, self.sample_rate_hz)
    }
}

/// Rough prior on the speaker's mean pitch period, used to size analysis
/// windows. Detectors only need the order of magnitude to be right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchPrior {
    mean_period_samples: f64,
}

impl PitchPrior {
    /// Prior from a mean fundamental frequency in Hz; `f0_hz` must lie in
    /// the supported 50-500 Hz range.
    pub fn from_f0_hz(f0_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        if !(f0_hz.is_finite() && (MIN_F0_HZ..=MAX_F0_HZ).contains(&f0_hz)) {
            return Err(Error::PitchOutOfRange { f0_hz });
        }
        Ok(Self { mean_period_samples: sample_rate_hz / f0_hz })
    }

    /// Prior from a mean period expressed in samples at `sample_rate_hz`.
    pub fn from_mean_period(mean_period_samples: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        let f0 = sample_rate_hz / mean_period_samples;
        if !(f0.is_finite() && (MIN_F0_HZ..=MAX_F0_HZ).contains(&f0)) {
            return Err(Error::PitchOutOfRange { f0_hz: f0 });
        }
        Ok(Self { mean_period_samples })
    }

    pub fn mean_period_samples(&self) -> f64 {
        self.mean_period_samples
    }
}

/// A strictly increasing sequence of glottal instants, as fractional sample
/// indices, tagged with the producer (detector name or `"reference"`).
#[derive(Debug, Clone, PartialEq)]
pub struct GciSequence {
    instants: Vec<f64>,
    source: String,
}

impl GciSequence {
    pub fn new(source: impl Into<String>, instants: Vec<f64>) -> Result<Self> {
        for (i, w) in instants.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NotIncreasing { index: i + 1 });
            }
        }
        if instants.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite { what: "instant sequence" });
        }
        Ok(Self { instants, source: source.into() })
    }

    pub fn empty(source: impl Into<String>) -> Self {
        Self { instants: Vec::new(), source: source.into() }
    }

    /// Internal constructor for sequences produced in increasing order.
    pub(crate) fn from_sorted(source: impl Into<String>, instants: Vec<f64>) -> Self {
        debug_assert!(instants.windows(2).all(|w| w[1] > w[0]));
        Self { instants, source: source.into() }
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    /// Sequence with every instant shifted by `offset` samples.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            instants: self.instants.iter().map(|t| t + offset).collect(),
            source: self.source.clone(),
        }
    }

    /// Mean spacing between consecutive instants, if there are at least two.
    pub fn mean_period_samples(&self) -> Option<f64> {
        let n = self.instants.len();
        if n < 2 {
            return None;
        }
        Some((self.instants[n - 1] - self.instants[0]) / (n - 1) as f64)
    }
}
