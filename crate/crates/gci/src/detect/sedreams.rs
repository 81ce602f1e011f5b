//! Mean-based-signal detector with interval refinement, plus a fast variant.
//!
//! A sliding weighted average of the speech with a window somewhat longer
//! than the mean pitch period produces a smooth oscillation at the pitch
//! rate (the mean-based signal). Each local minimum of that oscillation is
//! followed, within a fixed fraction of the local cycle, by the glottal
//! closure; the exact instant is recovered as the strongest positive sample
//! of the linear-prediction residual inside that interval.
//!
//! The fast variant exploits the smoothness of the mean-based signal: it is
//! evaluated only on a coarse grid plus a short descent around each grid
//! minimum, and the residual is computed only inside the refinement
//! intervals. Its output is intended to be sample-identical to the full
//! detector except for rare boundary ties.

use crate::dsp::lpc::{lp_residual, lp_residual_in_ranges, LpcConfig};
use crate::dsp::peaks::local_minima;
use crate::error::{Error, Result};
use crate::signal::{GciSequence, PitchPrior, Waveform};
use crate::window::{WindowShape, WindowSpec};

/// Tuning for the mean-based-signal detector.
#[derive(Debug, Clone, Copy)]
pub struct SedreamsConfig {
    /// Mean-based window span as a multiple of the mean period.
    pub window_factor: f64,
    /// Refinement interval length as a fraction of the local cycle.
    pub interval_factor: f64,
    /// Coarse grid spacing `2^levels` for the fast variant.
    pub coarse_levels: u32,
}

impl Default for SedreamsConfig {
    fn default() -> Self {
        Self { window_factor: 1.75, interval_factor: 0.35, coarse_levels: 4 }
    }
}

const METHOD: &str = "sedreams";
const METHOD_FAST: &str = "fast-sedreams";

/// Sliding weighted average of `x`: at each sample, the window-weighted mean
/// of the neighborhood, with the window truncated at the signal edges and
/// renormalized to the weight it actually covers. A convex combination of
/// input samples, so constants pass through unchanged.
pub fn mean_based_signal(x: &Waveform, window: &WindowSpec) -> Waveform {
    let s = x.samples();
    let w = window.weights();
    let half = window.half_length() as i64;
    let n = s.len() as i64;
    let full_weight: f64 = w.iter().sum();
    let mut out = Vec::with_capacity(s.len());
    for i in 0..n {
        let lo = (-half).max(-i);
        let hi = half.min(n - 1 - i);
        let mut num = 0.0;
        for m in lo..=hi {
            num += w[(m + half) as usize] * s[(i + m) as usize];
        }
        let den = if lo == -half && hi == half {
            full_weight
        } else {
            w[(lo + half) as usize..=(hi + half) as usize].iter().sum()
        };
        out.push(num / den);
    }
    x.with_samples(out)
}

/// One mean-based sample, shared by the full signal path and the fast
/// grid/descent path so both produce bit-identical values.
fn mean_based_at(s: &[f64], w: &[f64], half: i64, full_weight: f64, i: usize) -> f64 {
    let n = s.len() as i64;
    let i = i as i64;
    let lo = (-half).max(-i);
    let hi = half.min(n - 1 - i);
    let mut num = 0.0;
    for m in lo..=hi {
        num += w[(m + half) as usize] * s[(i + m) as usize];
    }
    let den = if lo == -half && hi == half {
        full_weight
    } else {
        w[(lo + half) as usize..=(hi + half) as usize].iter().sum()
    };
    num / den
}

/// Refinement intervals `[m_k, m_k + factor * period_k]` in integer samples,
/// where `period_k` is the distance to the next minimum; the last minimum
/// reuses the previous period, and a lone minimum falls back to the prior.
fn intervals_from_minima(
    minima: &[usize],
    factor: f64,
    fallback_period: f64,
    n: usize,
) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(minima.len());
    for (k, &m) in minima.iter().enumerate() {
        let period = if k + 1 < minima.len() {
            (minima[k + 1] - m) as f64
        } else if k > 0 {
            (m - minima[k - 1]) as f64
        } else {
            fallback_period
        };
        let end = ((m as f64 + factor * period).floor() as usize).min(n.saturating_sub(1));
        if end >= m {
            out.push((m, end));
        }
    }
    out
}

/// The strongest positive residual sample inside each interval. Negative
/// spikes are ignored (positive polarity is enforced upstream), and an
/// interval with no positive sample yields no GCI.
fn refine(residual: &[f64], intervals: &[(usize, usize)]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(intervals.len());
    for &(lo, hi) in intervals {
        let mut best: Option<usize> = None;
        for i in lo..=hi.min(residual.len() - 1) {
            if residual[i] > 0.0 && best.map_or(true, |b| residual[i] > residual[b]) {
                best = Some(i);
            }
        }
        if let Some(b) = best {
            if out.last().map_or(true, |&p| (b as f64) > p) {
                out.push(b as f64);
            }
        }
    }
    out
}

/// Detect GCIs with the mean-based-signal method.
pub fn detect_sedreams(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_sedreams_with(x, prior, &SedreamsConfig::default())
}

pub fn detect_sedreams_with(
    x: &Waveform,
    prior: &PitchPrior,
    cfg: &SedreamsConfig,
) -> Result<GciSequence> {
    let lpc = LpcConfig::for_rate(x.sample_rate_hz());
    let residual = match lp_residual(x, &lpc) {
        Ok(r) => r,
        Err(Error::TooShort { .. }) => return Ok(GciSequence::empty(METHOD)),
        Err(e) => return Err(e),
    };
    let window = mean_window(prior, cfg);
    let mbs = mean_based_signal(x, &window);
    let minima: Vec<usize> = local_minima(mbs.samples()).into_iter().map(|e| e.index).collect();
    let intervals = intervals_from_minima(
        &minima,
        cfg.interval_factor,
        prior.mean_period_samples(),
        x.samples().len(),
    );
    let instants = refine(residual.samples(), &intervals);
    Ok(GciSequence::from_sorted(METHOD, instants))
}

/// Detect GCIs with the fast variant: coarse-grid minima plus local descent
/// for the mean-based signal, and interval-restricted residual computation.
pub fn detect_sedreams_fast(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_sedreams_fast_with(x, prior, &SedreamsConfig::default())
}

pub fn detect_sedreams_fast_with(
    x: &Waveform,
    prior: &PitchPrior,
    cfg: &SedreamsConfig,
) -> Result<GciSequence> {
    let lpc = LpcConfig::for_rate(x.sample_rate_hz());
    if x.samples().len() < lpc.frame_len {
        return Ok(GciSequence::empty(METHOD_FAST));
    }
    let window = mean_window(prior, cfg);
    let s = x.samples();
    let n = s.len();
    let w = window.weights();
    let half = window.half_length() as i64;
    let full_weight: f64 = w.iter().sum();

    // Memoized point evaluations of the mean-based signal.
    let mut cache: Vec<f64> = vec![f64::NAN; n];
    let eval = |i: usize, cache: &mut Vec<f64>| -> f64 {
        if cache[i].is_nan() {
            cache[i] = mean_based_at(s, &w, half, full_weight, i);
        }
        cache[i]
    };

    let step = (1usize << cfg.coarse_levels).min(n.max(1));
    let grid: Vec<usize> = (0..n).step_by(step).collect();
    let mut minima: Vec<usize> = Vec::new();
    for k in 1..grid.len().saturating_sub(1) {
        let (a, b, c) = (grid[k - 1], grid[k], grid[k + 1]);
        let (va, vb, vc) =
            (eval(a, &mut cache), eval(b, &mut cache), eval(c, &mut cache));
        if vb < va && vb <= vc {
            // Descend to sample resolution; the mean-based signal is smooth
            // at scales below the grid spacing, so the basin is unimodal.
            let mut center = b;
            let mut h = step;
            while h > 1 {
                h /= 2;
                let lo = center.saturating_sub(h);
                let hi = (center + h).min(n - 1);
                let mut best = center;
                for cand in [lo, hi] {
                    if eval(cand, &mut cache) < eval(best, &mut cache) {
                        best = cand;
                    }
                }
                center = best;
            }
            if minima.last() != Some(&center) {
                minima.push(center);
            }
        }
    }

    let intervals = intervals_from_minima(
        &minima,
        cfg.interval_factor,
        prior.mean_period_samples(),
        n,
    );
    // Intervals are inclusive; the residual routine takes half-open ranges.
    let ranges: Vec<(usize, usize)> =
        intervals.iter().map(|&(lo, hi)| (lo, hi + 1)).collect();
    let residual = lp_residual_in_ranges(x, &lpc, &ranges)?;
    let instants = refine(&residual, &intervals);
    Ok(GciSequence::from_sorted(METHOD_FAST, instants))
}

fn mean_window(prior: &PitchPrior, cfg: &SedreamsConfig) -> WindowSpec {
    WindowSpec::odd_from_span(
        WindowShape::Blackman,
        cfg.window_factor * prior.mean_period_samples(),
    )
}
