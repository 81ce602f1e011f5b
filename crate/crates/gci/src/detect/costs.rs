//! Candidate lattices and N-best dynamic-programming selection.
//!
//! Group-delay detectors produce many candidate instants per cycle; the
//! selection stage picks the subset that minimizes a weighted sum of cost
//! elements, each normalized into [-0.5, 0.5] so that a reward is negative
//! and a penalty positive. Two elements are properties of the candidate
//! alone (its origin, the local speech energy, the slope of the group-delay
//! crossing); the other two (waveform similarity and pitch consistency)
//! depend on the chain a candidate joins and are evaluated during
//! selection. [`subset_cost`] prices an arbitrary subset with exactly the
//! same rules, so exhaustive enumeration over small lattices can serve as
//! an independent check of the selection.

use crate::error::{Error, Result};
use crate::signal::{PitchPrior, Waveform};

/// How a candidate was produced from the group-delay signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateOrigin {
    /// A negative-going zero crossing of the group delay.
    ZeroCrossing,
    /// A minimum-then-maximum excursion that never crossed zero,
    /// projected onto the time axis with slope -1.
    Projected,
}

/// The five cost elements of one candidate, each in [-0.5, 0.5].
///
/// `similarity` and `pitch` depend on the preceding chain and are filled
/// in per transition during selection; the stored values are the neutral
/// chain-start values (zero). The other three are fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostVector {
    /// Waveform similarity to the previous cycle (chain-start neutral 0).
    pub similarity: f64,
    /// Deviation from the recent pitch period (chain-start neutral 0).
    pub pitch: f64,
    /// -0.5 for a zero-crossing candidate, +0.5 for a projected one.
    pub projection: f64,
    /// 0.5 minus the local speech energy relative to the loudest candidate.
    pub energy: f64,
    /// Deviation of the crossing slope from the ideal -1 (projected: 0).
    pub slope: f64,
}

/// One timed candidate in the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// Fractional sample index.
    pub time: f64,
    pub origin: CandidateOrigin,
    pub costs: CostVector,
}

/// A time-sorted candidate lattice for one utterance.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    /// Wraps candidates, requiring strictly increasing times.
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        for (i, pair) in candidates.windows(2).enumerate() {
            if pair[1].time <= pair[0].time {
                return Err(Error::NotIncreasing { index: i + 1 });
            }
        }
        Ok(Self { candidates })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Nonnegative weights for the five cost elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub similarity: f64,
    pub pitch: f64,
    pub projection: f64,
    pub energy: f64,
    pub slope: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { similarity: 0.8, pitch: 0.5, projection: 0.4, energy: 0.3, slope: 0.1 }
    }
}

/// Selection-stage settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    /// Hypotheses kept per candidate during selection.
    pub beam_width: usize,
    /// A gap longer than this many mean periods starts a fresh chain.
    pub restart_gap_periods: f64,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self { beam_width: 5, restart_gap_periods: 10.0 }
    }
}

/// An optional sixth cost element, one value per candidate, with its own
/// weight. Used by detectors that need an extra discriminating feature on
/// top of the standard five.
#[derive(Debug, Clone, Copy)]
pub struct ExtraCosts<'a> {
    pub values: &'a [f64],
    pub weight: f64,
}

/// Similarity cost between the cycle ending at `t_prev` and the cycle
/// ending at `t_cur`: minus half the normalized cross-correlation of the
/// two speech segments, each `cycle_samples` long. Uncorrelated waveforms
/// score 0, a repeated cycle -0.5, an inverted one +0.5. The window is a
/// full nominal cycle regardless of the candidate spacing: measured over a
/// whole cycle, sub-period lags (formant ripple) decorrelate, while the
/// true period repeats — a lag-length window would instead reward any
/// regular spacing.
pub fn similarity_cost(speech: &Waveform, t_prev: f64, t_cur: f64, cycle_samples: f64) -> f64 {
    let x = speech.samples();
    let end_prev = (t_prev.round() as isize).clamp(0, x.len() as isize - 1) as usize;
    let end_cur = (t_cur.round() as isize).clamp(0, x.len() as isize - 1) as usize;
    let len = (cycle_samples.round() as usize).min(end_prev + 1);
    if len < 2 {
        return 0.0;
    }
    let a = &x[end_prev + 1 - len..=end_prev];
    let b = &x[end_cur + 1 - len..=end_cur];
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        dot += u * v;
        na += u * u;
        nb += v * v;
    }
    if na <= 0.0 || nb <= 0.0 {
        return 0.0;
    }
    -0.5 * dot / (na * nb).sqrt()
}

/// Implausible periods span this band around the prior mean period; a
/// chain spaced outside it earns the full pitch penalty no matter how
/// regular it is. Mere consistency must not certify a period: formant
/// ripple is every bit as regular as the pitch.
pub(crate) const PLAUSIBLE_PERIOD_BAND: (f64, f64) = (0.5, 2.0);

/// Pitch-consistency cost of a new period: the full 0.5 penalty when the
/// period falls outside the plausible `(low, high)` band in samples;
/// otherwise the relative deviation of the new period from the median of
/// it and the previous one, clipped to 0.5 and mapped onto [-0.5, 0.5] so
/// a repeated period scores -0.5. With no previous period (the second
/// element of a chain) a plausible period is neutral.
pub fn pitch_cost(prev_period: Option<f64>, period: f64, plausible: (f64, f64)) -> f64 {
    if period < plausible.0 || period > plausible.1 {
        return 0.5;
    }
    match prev_period {
        None => 0.0,
        Some(prev) => {
            let deviation = (period - prev).abs() / (period + prev);
            2.0 * deviation.min(0.5) - 0.5
        }
    }
}

/// Energy cost input: root-mean-square speech level in a 10 ms window
/// around `time`. The caller normalizes by the loudest candidate.
pub(crate) fn local_rms(speech: &Waveform, time: f64) -> f64 {
    let x = speech.samples();
    let half = (0.005 * speech.sample_rate_hz()).round() as isize;
    let center = time.round() as isize;
    let lo = (center - half).max(0) as usize;
    let hi = ((center + half) as usize).min(x.len() - 1);
    let sum: f64 = x[lo..=hi].iter().map(|v| v * v).sum();
    (sum / (hi - lo + 1) as f64).sqrt()
}

/// Maps a 10 ms RMS level to the energy cost, given the maximum level over
/// all candidates: 0.5 - rms/max, so the loudest candidate scores -0.5 and
/// silence +0.5.
pub(crate) fn energy_cost(rms: f64, max_rms: f64) -> f64 {
    if max_rms <= 0.0 {
        0.5
    } else {
        0.5 - rms / max_rms
    }
}

/// Maps the per-sample slope of a group-delay zero crossing to its cost:
/// an ideal isolated excitation sweeps through zero with slope -1, so the
/// deviation |slope + 1|, clipped to 1, is centered to [-0.5, 0.5].
pub(crate) fn slope_cost(slope: f64) -> f64 {
    (slope + 1.0).abs().min(1.0) - 0.5
}

/// Cost contributed by candidate `r` on its own, chain position aside.
fn static_cost(set: &CandidateSet, r: usize, weights: &CostWeights, extra: Option<&ExtraCosts>) -> f64 {
    let c = &set.candidates[r].costs;
    let mut cost =
        weights.projection * c.projection + weights.energy * c.energy + weights.slope * c.slope;
    if let Some(e) = extra {
        cost += e.weight * e.values[r];
    }
    cost
}

/// Cost of linking candidate `r` to predecessor `q`, whose own period (if
/// it did not start its chain) is `prev_period`.
fn link_cost(
    set: &CandidateSet,
    speech: &Waveform,
    prior: &PitchPrior,
    weights: &CostWeights,
    prev_period: Option<f64>,
    q: usize,
    r: usize,
) -> f64 {
    let t_q = set.candidates[q].time;
    let t_r = set.candidates[r].time;
    let cycle = prior.mean_period_samples();
    let plausible = (PLAUSIBLE_PERIOD_BAND.0 * cycle, PLAUSIBLE_PERIOD_BAND.1 * cycle);
    weights.similarity * similarity_cost(speech, t_q, t_r, cycle)
        + weights.pitch * pitch_cost(prev_period, t_r - t_q, plausible)
}

/// Total cost of selecting exactly the candidates at `subset` (indices
/// into `set`, strictly increasing). Chains restart across gaps longer
/// than the configured multiple of the prior mean period, with the
/// chain-dependent elements neutral at each chain start. This is the
/// single pricing rule the selection minimizes; enumerating subsets with
/// it yields the exact optimum on small lattices.
pub fn subset_cost(
    set: &CandidateSet,
    subset: &[usize],
    speech: &Waveform,
    prior: &PitchPrior,
    weights: &CostWeights,
    dp: &DpConfig,
    extra: Option<&ExtraCosts>,
) -> f64 {
    let gap_limit = dp.restart_gap_periods * prior.mean_period_samples();
    let mut total = 0.0;
    let mut prev: Option<usize> = None;
    let mut prev_period: Option<f64> = None;
    for &r in subset {
        total += static_cost(set, r, weights, extra);
        match prev {
            Some(q) if set.candidates[r].time - set.candidates[q].time <= gap_limit => {
                total += link_cost(set, speech, prior, weights, prev_period, q, r);
                prev_period = Some(set.candidates[r].time - set.candidates[q].time);
            }
            _ => prev_period = None,
        }
        prev = Some(r);
    }
    total
}

/// One selection hypothesis: candidate `cand` is the newest accepted
/// instant, reached from the hypothesis at `back`, with the period it
/// closed (None when it starts a chain) and the accumulated cost.
#[derive(Debug, Clone, Copy)]
struct Hypothesis {
    cand: usize,
    back: Option<usize>,
    period: Option<f64>,
    acc: f64,
}

/// Selects the subset of candidates minimizing [`subset_cost`] by N-best
/// dynamic programming and returns its times, sorted. At each candidate at
/// least the `beam_width` cheapest hypotheses survive, and every hypothesis
/// within the pitch weight of the local best always does: two hypotheses at
/// the same candidate differ in future cost only through the pitch element
/// of the single next link (after which their states coincide), so anything
/// further behind is provably hopeless and the kept set always contains an
/// optimal continuation — the selection is exactly the [`subset_cost`]
/// minimum. The empty subset (cost zero) is a valid outcome.
pub fn dp_select(
    set: &CandidateSet,
    speech: &Waveform,
    prior: &PitchPrior,
    weights: &CostWeights,
    dp: &DpConfig,
    extra: Option<&ExtraCosts>,
) -> Vec<f64> {
    let cands = set.candidates();
    if cands.is_empty() || dp.beam_width == 0 {
        return Vec::new();
    }
    if let Some(e) = extra {
        assert_eq!(e.values.len(), cands.len(), "one extra cost per candidate");
    }
    let gap_limit = dp.restart_gap_periods * prior.mean_period_samples();
    let cycle = prior.mean_period_samples();
    let plausible = (PLAUSIBLE_PERIOD_BAND.0 * cycle, PLAUSIBLE_PERIOD_BAND.1 * cycle);

    let mut hyps: Vec<Hypothesis> = Vec::new();
    // Hypothesis index range per candidate, in time order.
    let mut stages: Vec<(usize, usize)> = Vec::with_capacity(cands.len());
    // Cheapest finished chain among candidates too old to link to the
    // current one, maintained as a running prefix minimum.
    let mut expired_best: Option<usize> = None;
    let mut expired_upto = 0usize;
    // Oldest candidate still within linking range.
    let mut live_from = 0usize;

    for r in 0..cands.len() {
        let t_r = cands[r].time;
        while expired_upto < r && t_r - cands[expired_upto].time > gap_limit {
            let (lo, hi) = stages[expired_upto];
            for h in lo..hi {
                if expired_best.map_or(true, |b| hyps[h].acc < hyps[b].acc) {
                    expired_best = Some(h);
                }
            }
            expired_upto += 1;
        }
        live_from = live_from.max(expired_upto);

        let own = static_cost(set, r, weights, extra);
        let mut stage: Vec<Hypothesis> = Vec::new();
        // Start a chain at r, appending to the cheapest expired chain if
        // that helps; every expired predecessor prices this identically,
        // which is what lets the prefix minimum stand in for them all.
        let restart_base = expired_best.map_or(0.0, |b| hyps[b].acc.min(0.0));
        stage.push(Hypothesis {
            cand: r,
            back: expired_best.filter(|&b| hyps[b].acc < 0.0),
            period: None,
            acc: restart_base + own,
        });
        for q in live_from..r {
            let sim = weights.similarity * similarity_cost(speech, cands[q].time, t_r, cycle);
            let period = t_r - cands[q].time;
            // Every chain through q reaches the same state here — same
            // candidate, same latest period — so its continuations all
            // price identically and only the cheapest arrival can ever
            // be part of an optimum. Folding the rest away keeps the
            // stage linear in the number of reachable predecessors.
            let (lo, hi) = stages[q];
            let best = (lo..hi)
                .map(|h| {
                    let acc = hyps[h].acc
                        + own
                        + sim
                        + weights.pitch * pitch_cost(hyps[h].period, period, plausible);
                    (h, acc)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((h, acc)) = best {
                stage.push(Hypothesis { cand: r, back: Some(h), period: Some(period), acc });
            }
        }
        stage.sort_by(|a, b| a.acc.total_cmp(&b.acc));
        let within_margin = stage.partition_point(|h| h.acc <= stage[0].acc + weights.pitch);
        stage.truncate(within_margin.max(dp.beam_width));
        let lo = hyps.len();
        hyps.extend(stage);
        stages.push((lo, hyps.len()));
    }

    let best = (0..hyps.len()).min_by(|&a, &b| hyps[a].acc.total_cmp(&hyps[b].acc));
    let mut times = Vec::new();
    let mut at = best.filter(|&b| hyps[b].acc < 0.0);
    while let Some(h) = at {
        times.push(cands[hyps[h].cand].time);
        at = hyps[h].back;
    }
    times.reverse();
    times
}
