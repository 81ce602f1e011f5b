//! EGG-referenced evaluation: ground truth from the differenced
//! electroglottogram, speech/EGG alignment, glottal-cycle construction,
//! and the five performance measures.
//!
//! The contact signal rises sharply at each glottal closure, so the
//! positive peaks of the differenced EGG mark the reference instants.
//! Each reference instant owns one glottal cycle, bounded by midpoints
//! to its neighbors; a detector is then scored per cycle: exactly one
//! estimate inside is an identification (with its timing error ξ), none
//! is a miss, more than one a false alarm. Database-level figures pool
//! cycles across utterances rather than averaging per-file rates.

use crate::dsp::hilbert::hilbert_envelope;
use crate::dsp::lpc::{lp_residual, LpcConfig};
use crate::dsp::peaks::local_maxima;
use crate::error::{Error, Result};
use crate::signal::{GciSequence, PitchPrior, Waveform};

/// Reference peaks must clear this multiple of the median absolute
/// differenced-EGG value — contact noise sits near the median, closure
/// rises far above it.
const PEAK_THRESHOLD_MEDIANS: f64 = 3.0;
/// Glottal cycles last between 2 and 20 ms (fundamentals of 50-500 Hz);
/// cycles outside the band are treated as unvoiced and not scored.
const VOICED_PERIOD_MS: (f64, f64) = (2.0, 20.0);
/// Timing errors within this bound count toward the accuracy figure.
const ACCURACY_BOUND_MS: f64 = 0.25;
/// Alignment is trusted only when the correlation peak stands this many
/// standard deviations above the mean over the scanned lags; the largest
/// of several hundred flat-noise scores reaches about 3.6 on its own.
const ALIGNMENT_CONFIDENCE: f64 = 5.0;

/// Reference closure instants from an EGG recording: positive peaks of
/// the differenced signal above an adaptive threshold, at most one per
/// cycle. A constant or peakless EGG yields an empty sequence.
pub fn reference_gcis(egg: &Waveform, prior: &PitchPrior) -> GciSequence {
    let d = degg(egg);
    let threshold = PEAK_THRESHOLD_MEDIANS * median_abs(&d);
    // No two closures arrive within a quarter of the expected period,
    // nor faster than the shortest voiced cycle allows.
    let min_sep = (0.25 * prior.mean_period_samples())
        .max(egg.ms_to_samples(VOICED_PERIOD_MS.0));
    let mut peaks: Vec<_> = local_maxima(&d)
        .into_iter()
        .filter(|p| p.value > threshold && p.value > 0.0)
        .collect();
    peaks.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut kept: Vec<usize> = Vec::new();
    for p in &peaks {
        if kept
            .iter()
            .all(|&k| (k as f64 - p.index as f64).abs() >= min_sep)
        {
            kept.push(p.index);
        }
    }
    kept.sort_unstable();
    GciSequence::from_sorted("egg", kept.into_iter().map(|i| i as f64).collect())
}

/// Backward first difference of the EGG; index n holds the contact
/// change arriving at n, so a closure jump peaks on its own sample.
fn degg(egg: &Waveform) -> Vec<f64> {
    let x = egg.samples();
    let mut d = vec![0.0; x.len()];
    for i in 1..x.len() {
        d[i] = x[i] - x[i - 1];
    }
    d
}

fn median_abs(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mid = a.len() / 2;
    let (_, m, _) = a.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// One glottal cycle of the reference: half-open extent `[start, end)`
/// around its single reference instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cycle {
    pub start: f64,
    pub end: f64,
    pub gci: f64,
    /// Within the voiced period band; only voiced cycles are scored.
    pub voiced: bool,
}

/// Reference instants with their cycle extents and voicing mask.
#[derive(Debug, Clone)]
pub struct ReferenceCycles {
    gcis: GciSequence,
    cycles: Vec<Cycle>,
    sample_rate_hz: f64,
}

impl ReferenceCycles {
    /// Builds cycles bounded by midpoints between consecutive reference
    /// instants; the first and last extend half the adjacent period
    /// outward. Fewer than two instants give no cycles.
    pub fn new(gcis: GciSequence, sample_rate_hz: f64) -> Self {
        let r = gcis.instants();
        let mut cycles = Vec::with_capacity(r.len());
        if r.len() >= 2 {
            let ms = |samples: f64| samples / sample_rate_hz * 1000.0;
            for i in 0..r.len() {
                let start = if i == 0 {
                    r[0] - (r[1] - r[0]) / 2.0
                } else {
                    (r[i - 1] + r[i]) / 2.0
                };
                let end = if i == r.len() - 1 {
                    r[i] + (r[i] - r[i - 1]) / 2.0
                } else {
                    (r[i] + r[i + 1]) / 2.0
                };
                let extent = ms(end - start);
                cycles.push(Cycle {
                    start,
                    end,
                    gci: r[i],
                    voiced: (VOICED_PERIOD_MS.0..=VOICED_PERIOD_MS.1).contains(&extent),
                });
            }
        }
        Self { gcis, cycles, sample_rate_hz }
    }

    /// Reference instants and cycles straight from an EGG recording.
    pub fn from_egg(egg: &Waveform, prior: &PitchPrior) -> Self {
        Self::new(reference_gcis(egg, prior), egg.sample_rate_hz())
    }

    pub fn gcis(&self) -> &GciSequence {
        &self.gcis
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn voiced_count(&self) -> usize {
        self.cycles.iter().filter(|c| c.voiced).count()
    }

    /// The same cycles displaced in time — for shift-invariance checks
    /// and for mapping between EGG and speech timelines.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            gcis: self.gcis.shifted(offset),
            cycles: self
                .cycles
                .iter()
                .map(|c| Cycle {
                    start: c.start + offset,
                    end: c.end + offset,
                    gci: c.gci + offset,
                    ..*c
                })
                .collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Per-cycle outcome tallies plus the timing errors of identified
/// cycles. Outcomes from many utterances merge by addition, so corpus
/// figures aggregate cycles rather than averaging per-file rates.
#[derive(Debug, Clone, Default)]
pub struct EvalOutcomes {
    pub cycles: usize,
    pub identified: usize,
    pub missed: usize,
    pub false_alarmed: usize,
    /// ξ of each identified cycle: estimate minus reference, in ms.
    pub errors_ms: Vec<f64>,
}

impl EvalOutcomes {
    pub fn merge(&mut self, other: &EvalOutcomes) {
        self.cycles += other.cycles;
        self.identified += other.identified;
        self.missed += other.missed;
        self.false_alarmed += other.false_alarmed;
        self.errors_ms.extend_from_slice(&other.errors_ms);
    }

    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a EvalOutcomes>) -> EvalOutcomes {
        let mut total = EvalOutcomes::default();
        for p in parts {
            total.merge(p);
        }
        total
    }

    /// The five measures. With no identified cycles the spread and
    /// accuracy figures are reported as zero.
    pub fn report(&self) -> EvalReport {
        let pct = |n: usize| 100.0 * n as f64 / self.cycles.max(1) as f64;
        let acc = if self.identified == 0 {
            0.0
        } else {
            100.0
                * self
                    .errors_ms
                    .iter()
                    .filter(|e| e.abs() <= ACCURACY_BOUND_MS)
                    .count() as f64
                / self.identified as f64
        };
        EvalReport {
            idr_pct: pct(self.identified),
            mr_pct: pct(self.missed),
            far_pct: pct(self.false_alarmed),
            ida_ms: population_std(&self.errors_ms),
            acc025_pct: acc,
            errors_ms: self.errors_ms.clone(),
        }
    }

    /// Timing-error histogram with `half_range_ms` to either side of
    /// zero; errors beyond the range land in the edge bins, so the bar
    /// counts always sum to the identified-cycle count.
    pub fn histogram(&self, bin_width_ms: f64, half_range_ms: f64) -> Vec<HistogramBin> {
        let bins = ((2.0 * half_range_ms / bin_width_ms).ceil() as usize).max(1);
        let mut counts = vec![0usize; bins];
        for &e in &self.errors_ms {
            let raw = ((e + half_range_ms) / bin_width_ms).floor();
            let idx = (raw.max(0.0) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                center_ms: -half_range_ms + (i as f64 + 0.5) * bin_width_ms,
                count,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center_ms: f64,
    pub count: usize,
}

/// The five performance measures over a set of scored cycles.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Cycles with exactly one estimate.
    pub idr_pct: f64,
    /// Cycles with none.
    pub mr_pct: f64,
    /// Cycles with more than one.
    pub far_pct: f64,
    /// Spread of the timing errors: their population standard deviation.
    pub ida_ms: f64,
    /// Identified cycles whose |ξ| stays within a quarter millisecond.
    pub acc025_pct: f64,
    pub errors_ms: Vec<f64>,
}

impl EvalReport {
    /// Comma-separated `IDR,MR,FAR,IDA,ACC` row to six significant
    /// digits, matching the summary-table column order.
    pub fn table_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            sig6(self.idr_pct),
            sig6(self.mr_pct),
            sig6(self.far_pct),
            sig6(self.ida_ms),
            sig6(self.acc025_pct)
        )
    }
}

pub(crate) fn sig6(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(5 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Scores an estimate sequence against reference cycles, both on the
/// same timeline (align first if the EGG lags the microphone). Each
/// voiced cycle contributes exactly one outcome; estimates falling
/// outside every voiced cycle are not counted.
pub fn evaluate(reference: &ReferenceCycles, est: &GciSequence) -> Result<EvalOutcomes> {
    if reference.cycles.is_empty() {
        return Err(Error::EmptyReference);
    }
    if reference.voiced_count() == 0 {
        return Err(Error::NoVoicedCycles);
    }
    let times = est.instants();
    let ms = |samples: f64| samples / reference.sample_rate_hz * 1000.0;
    let mut out = EvalOutcomes::default();
    for c in reference.cycles.iter().filter(|c| c.voiced) {
        let lo = times.partition_point(|&t| t < c.start);
        let hi = times.partition_point(|&t| t < c.end);
        out.cycles += 1;
        match hi - lo {
            0 => out.missed += 1,
            1 => {
                out.identified += 1;
                out.errors_ms.push(ms(times[lo] - c.gci));
            }
            _ => out.false_alarmed += 1,
        }
    }
    Ok(out)
}

/// Constant delay of the EGG behind the microphone, in samples:
/// positive means EGG events arrive later, so speech-timeline instants
/// are EGG-timeline instants minus the returned delay. Found by sliding
/// the positive differenced EGG against the Hilbert envelope of the
/// prediction residual; a peak less than [`ALIGNMENT_CONFIDENCE`]
/// standard deviations above the mean score is refused, with the delay
/// left for the caller to supply manually.
pub fn align_egg(speech: &Waveform, egg: &Waveform, max_lag_ms: f64) -> Result<f64> {
    if (speech.sample_rate_hz() - egg.sample_rate_hz()).abs() > f64::EPSILON {
        return Err(Error::InvalidConfig(format!(
            "speech at {} Hz but EGG at {} Hz",
            speech.sample_rate_hz(),
            egg.sample_rate_hz()
        )));
    }
    let max_lag = speech.ms_to_samples(max_lag_ms).round() as isize;
    if max_lag < 1 {
        return Err(Error::InvalidConfig(format!(
            "maximum lag {max_lag_ms} ms spans no samples"
        )));
    }
    let dpos: Vec<f64> = degg(egg).into_iter().map(|v| v.max(0.0)).collect();
    let env = hilbert_envelope(&lp_residual(speech, &LpcConfig::for_rate(speech.sample_rate_hz()))?);
    let env = env.samples();
    let scores: Vec<f64> = (-max_lag..=max_lag)
        .map(|lag| {
            dpos.iter()
                .enumerate()
                .map(|(n, &d)| {
                    let m = n as isize - lag;
                    if m >= 0 && (m as usize) < env.len() {
                        d * env[m as usize]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    let (best, &peak) = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one lag");
    let confidence = if std > 0.0 { (peak - mean) / std } else { 0.0 };
    if confidence < ALIGNMENT_CONFIDENCE {
        return Err(Error::AlignmentUnreliable {
            confidence,
            needed: ALIGNMENT_CONFIDENCE,
        });
    }
    // The score varies smoothly with lag, so the vertex of a parabola
    // through the peak and its neighbors resolves the delay below one
    // sample.
    let refined = if best > 0 && best + 1 < scores.len() {
        let (a, b, c) = (scores[best - 1], scores[best], scores[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            best as f64 + 0.5 * (a - c) / denom
        } else {
            best as f64
        }
    } else {
        best as f64
    };
    Ok(refined - max_lag as f64)
}
