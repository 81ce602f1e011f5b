//! DYPSA: group-delay candidate generation over the linear-prediction
//! residual, then dynamic-programming selection.
//!
//! An isolated excitation impulse inside a short analysis window shows up
//! as a group delay equal to the impulse position; sweeping the window
//! across the signal therefore turns every impulse into a clean
//! negative-going zero crossing of the windowed, energy-weighted group
//! delay. Weaker events that only dent the group delay without a crossing
//! are recovered by projecting the dent onto the time axis. Both kinds of
//! candidate are then priced by the cost model in [`super::costs`] and the
//! cheapest subset wins.

use crate::detect::costs::{
    self, dp_select, Candidate, CandidateOrigin, CandidateSet, CostVector, CostWeights, DpConfig,
};
use crate::dsp::lpc::{lp_residual, LpcConfig};
use crate::dsp::peaks::{local_maxima, local_minima};
use crate::error::{Error, Result};
use crate::signal::{GciSequence, PitchPrior, Waveform};

/// Name attached to sequences produced by [`detect_dypsa`].
const METHOD: &str = "dypsa";

/// Tuning knobs for the DYPSA detector.
#[derive(Debug, Clone, Copy)]
pub struct DypsaConfig {
    /// Highest fundamental frequency the group-delay window must resolve;
    /// the window is kept shorter than this period so at most one
    /// excitation impulse occupies it.
    pub max_f0_hz: f64,
    /// Window length as a multiple of half the shortest expected period.
    pub window_factor: f64,
    pub weights: CostWeights,
    pub dp: DpConfig,
}

impl Default for DypsaConfig {
    fn default() -> Self {
        Self {
            max_f0_hz: 500.0,
            window_factor: 1.2,
            weights: CostWeights::default(),
            dp: DpConfig::default(),
        }
    }
}

impl DypsaConfig {
    /// Group-delay window length in samples: `window_factor` times half
    /// the shortest expected pitch period, rounded, at least 4, and forced
    /// odd so the window has an exact center.
    pub fn window_len(&self, sample_rate_hz: f64) -> usize {
        let shortest_period = sample_rate_hz / self.max_f0_hz;
        let r = (self.window_factor * shortest_period / 2.0).round() as usize;
        let r = r.max(4);
        if r % 2 == 0 {
            r + 1
        } else {
            r
        }
    }
}

/// Energy-weighted group delay of a sliding window, with the windows that
/// held no energy marked inert.
#[derive(Debug, Clone)]
pub struct GdSignal {
    values: Vec<f64>,
    inert: Vec<bool>,
}

impl GdSignal {
    /// `values[n]`: center of gravity of the squared signal over the
    /// window starting at `n`, minus half the window span, so a centered
    /// impulse scores zero. Bounded by plus/minus half the span.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Marks windows whose energy was indistinguishable from zero; their
    /// value is pinned to 0 and they produce no candidates.
    pub fn inert(&self) -> &[bool] {
        &self.inert
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How often the sliding sums are recomputed from scratch. Each slide adds
/// rounding error that would otherwise accumulate across the whole signal.
const REANCHOR_INTERVAL: usize = 1 << 12;

/// A window is inert when its energy falls this far below the loudest
/// window; the group delay of (numerically) nothing is meaningless.
const INERT_RELATIVE_ENERGY: f64 = 1e-24;

/// Energy-weighted group delay of `x` under a sliding rectangular window
/// of `window_len` samples, computed with sliding sums. Output sample `n`
/// covers the window starting at `n`; the result is `window_len - 1`
/// samples shorter than the input (empty if the input is shorter than one
/// window).
pub fn ewgd(x: &Waveform, window_len: usize) -> Result<GdSignal> {
    if window_len < 4 {
        return Err(Error::InvalidConfig(format!(
            "group-delay window must span at least 4 samples, got {window_len}"
        )));
    }
    let s = x.samples();
    if s.len() < window_len {
        return Ok(GdSignal { values: Vec::new(), inert: Vec::new() });
    }
    let n_out = s.len() - window_len + 1;
    let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
    let half_span = (window_len - 1) as f64 / 2.0;

    let mut energy = Vec::with_capacity(n_out);
    let mut moment = Vec::with_capacity(n_out);
    let mut e = 0.0;
    let mut m = 0.0;
    for n in 0..n_out {
        if n % REANCHOR_INTERVAL == 0 {
            e = 0.0;
            m = 0.0;
            for (r, &v) in sq[n..n + window_len].iter().enumerate() {
                e += v;
                m += r as f64 * v;
            }
        } else {
            // The window moved one sample right: the old first sample (which
            // carried weight 0) leaves, every remaining weight drops by one,
            // and the new last sample enters with the top weight.
            let leaving = sq[n - 1];
            let entering = sq[n + window_len - 1];
            m = m - (e - leaving) + (window_len - 1) as f64 * entering;
            e = e - leaving + entering;
        }
        energy.push(e);
        moment.push(m);
    }

    let max_energy = energy.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = INERT_RELATIVE_ENERGY * max_energy;
    let mut values = Vec::with_capacity(n_out);
    let mut inert = Vec::with_capacity(n_out);
    for n in 0..n_out {
        if energy[n] <= threshold {
            values.push(0.0);
            inert.push(true);
        } else {
            values.push((moment[n] / energy[n] - half_span).clamp(-half_span, half_span));
            inert.push(false);
        }
    }
    Ok(GdSignal { values, inert })
}

/// A candidate instant read off the group-delay signal, in group-delay
/// coordinates (window-start time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RawCandidate {
    pub time: f64,
    pub origin: CandidateOrigin,
    /// Per-sample slope at the crossing; projected candidates have none.
    pub slope: Option<f64>,
}

/// Reads candidates off a group-delay signal: every negative-going zero
/// crossing, plus a projected candidate for every local-minimum-then-
/// local-maximum excursion that stays on one side of zero. The projection
/// slides the excursion midpoint along a slope of -1 onto the time axis:
/// `t = (n1 + n2)/2 + (d(n1) + d(n2))/2`.
pub(crate) fn phase_slope_candidates(gd: &GdSignal) -> Vec<RawCandidate> {
    let d = gd.values();
    let inert = gd.inert();
    let mut out = Vec::new();
    for i in 0..d.len().saturating_sub(1) {
        if inert[i] || inert[i + 1] {
            continue;
        }
        if d[i] > 0.0 && d[i + 1] <= 0.0 {
            out.push(RawCandidate {
                time: i as f64 + d[i] / (d[i] - d[i + 1]),
                origin: CandidateOrigin::ZeroCrossing,
                slope: Some(d[i + 1] - d[i]),
            });
        }
    }
    let minima = local_minima(d);
    let maxima = local_maxima(d);
    let mut mx = maxima.iter().peekable();
    for min in &minima {
        while mx.peek().map_or(false, |m| m.index <= min.index) {
            mx.next();
        }
        let Some(max) = mx.peek() else { break };
        // Same strict sign at both ends means the excursion between two
        // neighboring extrema never touched zero.
        if min.value * max.value <= 0.0 {
            continue;
        }
        if (min.index..=max.index).any(|i| inert[i]) {
            continue;
        }
        out.push(RawCandidate {
            time: (min.index + max.index) as f64 / 2.0 + (min.value + max.value) / 2.0,
            origin: CandidateOrigin::Projected,
            slope: None,
        });
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    out.dedup_by(|a, b| a.time == b.time);
    out
}

/// Turns raw group-delay candidates into a priced lattice against the
/// speech waveform. `shift` converts group-delay coordinates to signal
/// coordinates (half the window span for a window-start convention).
pub(crate) fn price_candidates(
    raw: &[RawCandidate],
    speech: &Waveform,
    shift: f64,
) -> Result<CandidateSet> {
    let limit = (speech.len() - 1) as f64;
    let all: Vec<(f64, &RawCandidate)> = raw
        .iter()
        .map(|rc| ((rc.time + shift).min(limit), rc))
        .collect();
    // One candidate per excitation event: the phase slope of a single
    // discontinuity can cross several times within its ringing, and no
    // two closures arrive within half a millisecond, so each cluster of
    // tightly packed candidates keeps one representative — its first
    // true crossing when it has one, otherwise its first member.
    let min_sep = speech.ms_to_samples(0.5);
    let mut shifted: Vec<(f64, &RawCandidate)> = Vec::with_capacity(all.len());
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 - all[j - 1].0 < min_sep {
            j += 1;
        }
        let pick = all[i..j]
            .iter()
            .find(|(_, rc)| matches!(rc.origin, CandidateOrigin::ZeroCrossing))
            .unwrap_or(&all[i]);
        shifted.push(*pick);
        i = j;
    }
    let rms: Vec<f64> = shifted.iter().map(|&(t, _)| costs::local_rms(speech, t)).collect();
    let max_rms = rms.iter().cloned().fold(0.0_f64, f64::max);
    let candidates = shifted
        .iter()
        .zip(&rms)
        .map(|(&(time, rc), &r)| Candidate {
            time,
            origin: rc.origin,
            costs: CostVector {
                similarity: 0.0,
                pitch: 0.0,
                projection: match rc.origin {
                    CandidateOrigin::ZeroCrossing => -0.5,
                    CandidateOrigin::Projected => 0.5,
                },
                energy: costs::energy_cost(r, max_rms),
                slope: rc.slope.map_or(0.0, costs::slope_cost),
            },
        })
        .collect();
    CandidateSet::new(candidates)
}

/// Detects glottal closure instants with default settings.
pub fn detect_dypsa(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_dypsa_with(x, prior, &DypsaConfig::default())
}

/// Detects glottal closure instants: linear-prediction residual, sliding
/// energy-weighted group delay, zero-crossing and projected candidates,
/// dynamic-programming selection.
pub fn detect_dypsa_with(
    x: &Waveform,
    prior: &PitchPrior,
    cfg: &DypsaConfig,
) -> Result<GciSequence> {
    let residual = match lp_residual(x, &LpcConfig::for_rate(x.sample_rate_hz())) {
        Ok(r) => r,
        Err(Error::TooShort { .. }) => return Ok(GciSequence::empty(METHOD)),
        Err(e) => return Err(e),
    };
    let window_len = cfg.window_len(x.sample_rate_hz());
    let gd = ewgd(&residual, window_len)?;
    let raw = phase_slope_candidates(&gd);
    let set = price_candidates(&raw, x, (window_len - 1) as f64 / 2.0)?;
    let times = dp_select(&set, x, prior, &cfg.weights, &cfg.dp, None);
    GciSequence::new(METHOD, times)
}
