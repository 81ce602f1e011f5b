//! YAGA: multiscale-product analysis of the voice-source estimate, then
//! the same group-delay candidate generation and dynamic-programming
//! selection as DYPSA.
//!
//! Inverse-filtering the non-preemphasized speech with the usual
//! prediction coefficients estimates the glottal flow derivative, which
//! carries discontinuities at both glottal closures and openings. An
//! undecimated wavelet transform responds to a discontinuity at every
//! scale in the same place, so the product of the first few detail levels
//! sharpens discontinuities and suppresses everything else. Candidates are
//! read off the group delay of that product; a polarity cost lets the
//! selection tell closure discontinuities from opening ones.

use crate::detect::costs::{dp_select, CostWeights, DpConfig, ExtraCosts};
use crate::detect::dypsa::{ewgd, phase_slope_candidates, price_candidates};
use crate::dsp::lpc::{voice_source, LpcConfig};
use crate::error::{Error, Result};
use crate::signal::{GciSequence, PitchPrior, Waveform};

/// Name attached to sequences produced by [`detect_yaga`].
const METHOD: &str = "yaga";

/// Smoothing taps of the spline wavelet pair (one vanishing moment).
const SMOOTH_TAPS: [f64; 4] = [0.125, 0.375, 0.375, 0.125];
/// Differencing taps: respond to jumps, annihilate constants.
const DETAIL_TAPS: [f64; 2] = [-2.0, 2.0];

/// Tuning knobs for the YAGA detector.
#[derive(Debug, Clone, Copy)]
pub struct YagaConfig {
    /// Number of detail levels multiplied together.
    pub depth: usize,
    /// Highest fundamental the group-delay window must resolve.
    pub max_f0_hz: f64,
    /// Window length as a multiple of half the shortest expected period.
    pub window_factor: f64,
    /// Weight of the closure-polarity cost element.
    pub polarity_weight: f64,
    pub weights: CostWeights,
    pub dp: DpConfig,
}

impl Default for YagaConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            max_f0_hz: 500.0,
            window_factor: 1.2,
            polarity_weight: 0.4,
            weights: CostWeights::default(),
            dp: DpConfig::default(),
        }
    }
}

impl YagaConfig {
    /// Group-delay window length in samples; same rule as DYPSA.
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

/// The product of the first `depth` undecimated detail levels.
#[derive(Debug, Clone)]
pub struct MultiscaleProduct {
    values: Vec<f64>,
    depth: usize,
}

impl MultiscaleProduct {
    /// Near zero away from discontinuities, impulse-like at them. Odd
    /// `depth` preserves the discontinuity polarity.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sample of `x` at `i`, symmetric about the ends (`x[-1] = x[0]`,
/// `x[n] = x[n-1]`), repeating as needed.
fn reflected(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return x[i as usize];
        }
    }
}

/// Causal filtering by `taps` spread `stride` apart, over `0..out_len`
/// with symmetric extension: `y(n) = sum_k taps[k] * x(n - k*stride)`.
fn filter_strided(x: &[f64], taps: &[f64], stride: usize, out_len: usize) -> Vec<f64> {
    (0..out_len)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(k, &t)| t * reflected(x, n as isize - (k * stride) as isize))
                .sum()
        })
        .collect()
}

/// Undecimated detail levels `1..=depth` of `u`: at each level the two
/// filters are spread by another factor of two (holes in place of
/// decimation), the detail taken from the previous approximation. Each
/// level is shifted into alignment so that one discontinuity peaks at the
/// same index in every level.
pub fn swt_details(u: &Waveform, depth: usize) -> Result<Vec<Vec<f64>>> {
    if depth == 0 || (1usize << depth) > u.len() {
        return Err(Error::TooShort { needed: 1 << depth.max(1), got: u.len() });
    }
    let n = u.len();
    // The deepest level reaches furthest ahead after alignment; evaluate
    // everything long enough so every aligned read stays in range.
    let reach: usize = (0..depth).map(|j| 2 * ((1usize << j) - 1) + (1 << j)).max().unwrap_or(0);
    let ext = n + reach;
    let mut details = Vec::with_capacity(depth);
    let mut approx: Vec<f64> = u.samples().to_vec();
    for level in 0..depth {
        let stride = 1usize << level;
        let d = filter_strided(&approx, &DETAIL_TAPS, stride, ext);
        // The smoothing filters before this level delay the signal by
        // 1.5 * (2^level - 1) samples and the differencing pair is odd
        // about half its stride, so level j peaks 2^(j+1) - 2 samples
        // later than level 0 (plus a common half-sample shared by all
        // levels). Shifting each level back by that amount lines the
        // responses up.
        let shift = 2 * (stride - 1);
        details.push((0..n).map(|i| d[(i + shift).min(ext - 1)]).collect());
        if level + 1 < depth {
            approx = filter_strided(&approx, &SMOOTH_TAPS, stride, ext);
        }
    }
    Ok(details)
}

/// Multiplies the first `depth` aligned detail levels sample by sample.
pub fn swt_multiscale_product(u: &Waveform, depth: usize) -> Result<MultiscaleProduct> {
    let details = swt_details(u, depth)?;
    let n = u.len();
    let mut values = vec![1.0; n];
    for d in &details {
        for (v, &di) in values.iter_mut().zip(d) {
            *v *= di;
        }
    }
    Ok(MultiscaleProduct { values, depth })
}

/// Sign the multiscale product takes at a glottal closure of
/// positive-polarity voicing. The voice source jumps upward at closure
/// (the abrupt end of the negative-going closing phase), so the reference
/// is an upward step run through the same transform — measured rather
/// than hard-coded, so a change of filter convention cannot silently
/// flip the polarity cost.
fn closure_sign(depth: usize) -> f64 {
    let probe_len = 64.max(4 << depth);
    let x: Vec<f64> = (0..probe_len)
        .map(|i| if i < probe_len / 2 { 0.0 } else { 1.0 })
        .collect();
    let w = Waveform::new(x, 16000.0).expect("probe construction");
    let p = swt_multiscale_product(&w, depth).expect("probe transform");
    let peak = p
        .values()
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    peak.signum()
}

/// Polarity cost per candidate: -0.5 when the dominant multiscale-product
/// lobe within two samples of the candidate carries the closure sign,
/// +0.5 when it carries the opposite (opening-like) sign.
fn polarity_costs(product: &[f64], times_in_product: &[f64], depth: usize) -> Vec<f64> {
    let expected = closure_sign(depth);
    times_in_product
        .iter()
        .map(|&t| {
            let c = t.round() as isize;
            let lo = (c - 2).max(0) as usize;
            let hi = (c + 2).min(product.len() as isize - 1) as usize;
            let lobe = product[lo..=hi]
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            if lobe * expected > 0.0 {
                -0.5
            } else {
                0.5
            }
        })
        .collect()
}

/// Detects glottal closure instants with default settings.
pub fn detect_yaga(x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
    detect_yaga_with(x, prior, &YagaConfig::default())
}

/// Detects glottal closure instants: voice-source estimate, multiscale
/// product, group-delay candidates, selection with a closure-polarity
/// element on top of the standard five costs. Similarity and energy are
/// measured on the voice source rather than the speech — with the vocal
/// tract removed, neighboring cycles compare more directly.
pub fn detect_yaga_with(x: &Waveform, prior: &PitchPrior, cfg: &YagaConfig) -> Result<GciSequence> {
    let source = match voice_source(x, &LpcConfig::for_rate(x.sample_rate_hz())) {
        Ok(u) => u,
        Err(Error::TooShort { .. }) => return Ok(GciSequence::empty(METHOD)),
        Err(e) => return Err(e),
    };
    let product = swt_multiscale_product(&source, cfg.depth)?;
    let pw = source.with_samples(product.values().to_vec());
    let window_len = cfg.window_len(x.sample_rate_hz());
    let gd = ewgd(&pw, window_len)?;
    let raw = phase_slope_candidates(&gd);
    // Half the window span maps window starts to signal time; the common
    // transform delay of half a sample comes off as well.
    let shift = (window_len - 1) as f64 / 2.0 - 0.5;
    let set = price_candidates(&raw, &source, shift)?;
    let in_product: Vec<f64> = set.candidates().iter().map(|c| c.time).collect();
    let polarity = polarity_costs(product.values(), &in_product, cfg.depth);
    let extra = ExtraCosts { values: &polarity, weight: cfg.polarity_weight };
    let times = dp_select(&set, &source, prior, &cfg.weights, &cfg.dp, Some(&extra));
    GciSequence::new(METHOD, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::lpc::voice_source;
    use crate::synth::{synthesize_voice, VoiceSpec};

    fn ncc(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len());
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        for i in 0..n {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        dot / (na * nb).sqrt().max(1e-300)
    }

    #[test]
    fn step_discontinuity_dominates_product() {
        let n0 = 500;
        let x: Vec<f64> = (0..1000).map(|i| if i < n0 { 0.0 } else { 1.0 }).collect();
        let w = Waveform::new(x, 16000.0).unwrap();
        let p = swt_multiscale_product(&w, 3).unwrap();
        let peak_at = p
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert!(
            (peak_at as isize - n0 as isize).unsigned_abs() <= 2,
            "peak at {peak_at}, step at {n0}"
        );
        let peak = p.values()[peak_at].abs();
        for (i, v) in p.values().iter().enumerate() {
            if (i as isize - n0 as isize).unsigned_abs() > 8 {
                assert!(
                    v.abs() < 0.01 * peak,
                    "residue {v} at {i}, {} from the step",
                    i as isize - n0 as isize
                );
            }
        }
    }

    #[test]
    fn constants_are_annihilated_at_every_level() {
        let w = Waveform::new(vec![3.25; 256], 16000.0).unwrap();
        for d in swt_details(&w, 3).unwrap() {
            assert!(d.iter().all(|v| v.abs() < 1e-12));
        }
        let p = swt_multiscale_product(&w, 3).unwrap();
        assert!(p.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_signal_gives_zero_product() {
        let w = Waveform::new(vec![0.0; 64], 16000.0).unwrap();
        let p = swt_multiscale_product(&w, 3).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_short_for_depth_errors() {
        let w = Waveform::new(vec![1.0; 7], 16000.0).unwrap();
        assert!(matches!(
            swt_multiscale_product(&w, 3),
            Err(Error::TooShort { needed: 8, got: 7 })
        ));
    }

    #[test]
    fn scaling_cubes_product_and_keeps_times() {
        let spec = VoiceSpec::new(140.0, 0.4, 5);
        let voice = synthesize_voice(&spec);
        let u = voice_source(&voice.speech, &LpcConfig::for_rate(16000.0)).unwrap();
        let p = swt_multiscale_product(&u, 3).unwrap();
        // A power-of-two gain stays exact through every linear stage.
        let scaled = u.with_samples(u.samples().iter().map(|v| v * 4.0).collect());
        let ps = swt_multiscale_product(&scaled, 3).unwrap();
        for (&a, &b) in p.values().iter().zip(ps.values()) {
            assert_eq!(b, 64.0 * a);
        }
        let prior = PitchPrior::from_f0_hz(140.0, 16000.0).unwrap();
        let base = detect_yaga(&voice.speech, &prior).unwrap();
        let gained = voice
            .speech
            .with_samples(voice.speech.samples().iter().map(|v| v * 4.0).collect());
        let same = detect_yaga(&gained, &prior).unwrap();
        assert_eq!(base.instants(), same.instants());
    }

    #[test]
    fn product_is_sparser_than_the_source() {
        let spec = VoiceSpec::new(110.0, 0.6, 21);
        let voice = synthesize_voice(&spec);
        let u = voice_source(&voice.speech, &LpcConfig::for_rate(16000.0)).unwrap();
        let p = swt_multiscale_product(&u, 3).unwrap();
        let kurtosis = |x: &[f64]| {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n / (var * var)
        };
        let ku = kurtosis(u.samples());
        let kp = kurtosis(p.values());
        assert!(kp > ku, "product kurtosis {kp} not above source {ku}");
    }

    #[test]
    fn voice_source_recovers_known_excitation() {
        use crate::dsp::lpc::LpcModel;
        // A known glottal-derivative pulse train through a fixed stable
        // AR(10) tract; inverse filtering should hand the train back.
        // Each pulse is an exponentially decaying flank, giving the train
        // the low-frequency tilt a real flow derivative carries — the
        // tilt the preemphasized analysis deliberately keeps out of the
        // tract model, and which therefore survives in the estimate.
        let n = 16000;
        let period = 160;
        let mut train = vec![0.0; n];
        let mut t = period / 2;
        while t < n {
            train[t] = 1.0;
            t += period;
        }
        let mut tail = 0.0;
        for v in &mut train {
            tail = *v + 0.97 * tail;
            *v = tail;
        }
        let mut poly = vec![1.0];
        for (f, r) in [
            (500.0, 0.94),
            (1400.0, 0.92),
            (2300.0, 0.90),
            (3200.0, 0.93),
            (4100.0, 0.91),
        ] {
            let theta = 2.0 * std::f64::consts::PI * f / 16000.0;
            let (b1, b2) = (-2.0 * r * theta.cos(), r * r);
            let mut next = vec![0.0; poly.len() + 2];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] += c * b1;
                next[i + 2] += c * b2;
            }
            poly = next;
        }
        let tract = LpcModel::from_coefficients(poly[1..].iter().map(|&c| -c).collect());
        let speech = Waveform::new(tract.synthesize(&train), 16000.0).unwrap();
        let u = voice_source(&speech, &LpcConfig::for_rate(16000.0)).unwrap();
        // Skip the first frame, where the analysis has not yet settled.
        let skip = 400;
        let r = ncc(&u.samples()[skip..], &train[skip..]);
        assert!(r > 0.8, "voice source correlates only {r} with the pulse train");
    }

    #[test]
    fn silence_inverse_filters_to_silence() {
        let w = Waveform::new(vec![0.0; 8000], 16000.0).unwrap();
        let u = voice_source(&w, &LpcConfig::for_rate(16000.0)).unwrap();
        assert!(u.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_stays_structureless_noise() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x: Vec<f64> = (0..8000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = Waveform::new(x.clone(), 16000.0).unwrap();
        let u = voice_source(&w, &LpcConfig::for_rate(16000.0)).unwrap();
        // Flat input carries no source tilt, so the estimate is the input
        // shaded by the tilt the analysis always hands to the source.
        let mut shaded = x;
        let mut tail = 0.0;
        for v in &mut shaded {
            tail = *v + 0.97 * tail;
            *v = tail;
        }
        // An 18-tap inverse model carries only the head of the infinite
        // tilt response, so agreement is strong but not total.
        let r = ncc(&u.samples()[400..], &shaded[400..]);
        assert!(r > 0.7, "estimate should track the input, got {r}");
        // And no impulsive structure appears: kurtosis stays near the
        // 1.8 of a uniform draw, far from the spikes of voiced material.
        let s = &u.samples()[400..];
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / s.len() as f64;
        let kurt = s.iter().map(|v| (v - m).powi(4)).sum::<f64>() / s.len() as f64 / (var * var);
        assert!(kurt < 4.0, "unexpected impulsive structure, kurtosis {kurt}");
    }

    #[test]
    fn detects_epochs_of_synthetic_voice() {
        let spec = VoiceSpec::new(120.0, 1.0, 29);
        let voice = synthesize_voice(&spec);
        let prior = PitchPrior::from_f0_hz(120.0, 16000.0).unwrap();
        let found = detect_yaga(&voice.speech, &prior).unwrap();
        let half_ms = 8.0; // 0.5 ms at 16 kHz
        let hits = voice
            .epochs
            .instants()
            .iter()
            .filter(|&&e| {
                found.instants().iter().any(|&t| (t - e).abs() <= half_ms)
            })
            .count();
        assert!(
            hits * 50 >= voice.epochs.len() * 49,
            "only {hits} of {} epochs within half a millisecond",
            voice.epochs.len()
        );
        assert!(
            found.len() <= voice.epochs.len() + voice.epochs.len() / 10,
            "{} detections for {} epochs",
            found.len(),
            voice.epochs.len()
        );
    }

    #[test]
    fn silence_gives_empty_sequence() {
        let w = Waveform::new(vec![0.0; 16000], 16000.0).unwrap();
        let prior = PitchPrior::from_f0_hz(100.0, 16000.0).unwrap();
        let out = detect_yaga(&w, &prior).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.source(), "yaga");
    }
}
