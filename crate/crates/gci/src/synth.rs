//! Synthetic voiced speech with known epochs.
//!
//! The generator drives a randomly chosen stable all-pole "vocal tract"
//! with a jittered impulse train (or, for mixed-phase material, with an
//! anticausal glottal pulse train), and builds a matching synthetic EGG
//! whose differenced signal peaks exactly at the epochs. Everything is
//! seeded, so test material is reproducible.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dsp::lpc::LpcModel;
use crate::signal::{GciSequence, Waveform};

/// Parameters for one synthetic utterance.
#[derive(Debug, Clone)]
pub struct VoiceSpec {
    pub f0_hz: f64,
    /// Peak-to-peak period jitter as a fraction of the period (0.03 = 3%).
    pub jitter: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// All-pole vocal-tract model order (pole pairs = order / 2).
    pub tract_order: usize,
    pub seed: u64,
}

impl VoiceSpec {
    pub fn new(f0_hz: f64, duration_s: f64, seed: u64) -> Self {
        Self {
            f0_hz,
            jitter: 0.03,
            duration_s,
            sample_rate_hz: 16000.0,
            tract_order: 10,
            seed,
        }
    }
}

/// A synthetic utterance: speech, the true epochs, and a synthetic EGG
/// aligned with them.
#[derive(Debug, Clone)]
pub struct SyntheticVoice {
    pub speech: Waveform,
    pub epochs: GciSequence,
    pub egg: Waveform,
}

/// Random stable all-pole tract: conjugate pole pairs with radii in
/// [0.88, 0.96] and center frequencies spread over 250-3800 Hz.
fn random_tract(order: usize, rate: f64, rng: &mut ChaCha8Rng) -> LpcModel {
    let pairs = (order / 2).max(1);
    let mut freqs: Vec<f64> = (0..pairs)
        .map(|i| {
            let lo = 250.0 + 3550.0 * i as f64 / pairs as f64;
            let hi = 250.0 + 3550.0 * (i as f64 + 0.7) / pairs as f64;
            rng.gen_range(lo..hi)
        })
        .collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Expand the product of (1 - 2 r cos(theta) z^-1 + r^2 z^-2) factors.
    let mut poly = vec![1.0];
    for f in freqs {
        let r = rng.gen_range(0.88..0.96);
        let theta = 2.0 * std::f64::consts::PI * f / rate;
        let (b1, b2) = (-2.0 * r * theta.cos(), r * r);
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c * b1;
            next[i + 2] += c * b2;
        }
        poly = next;
    }
    // Predictor coefficients are the negated polynomial tail.
    LpcModel::from_coefficients(poly[1..].iter().map(|&c| -c).collect())
}

/// Jittered epoch times in samples, starting half a period in.
fn jittered_epochs(spec: &VoiceSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = (spec.duration_s * spec.sample_rate_hz).round() as usize;
    let period = spec.sample_rate_hz / spec.f0_hz;
    let mut t = period / 2.0;
    let mut epochs = Vec::new();
    while (t.round() as usize) < n.saturating_sub(2) {
        epochs.push(t.round() as usize);
        t += period * (1.0 + spec.jitter * rng.gen_range(-1.0..1.0));
    }
    epochs
}

/// Synthetic EGG: a rapid contact rise at each epoch followed by a linear
/// decay, so the differenced EGG has its positive peak exactly at the epoch.
fn egg_from_epochs(epochs: &[usize], n: usize, rate: f64, f0_hz: f64) -> Waveform {
    let mut egg = vec![0.0; n];
    for (k, &t) in epochs.iter().enumerate() {
        let period = if k + 1 < epochs.len() {
            (epochs[k + 1] - t) as f64
        } else if k > 0 {
            (t - epochs[k - 1]) as f64
        } else {
            rate / f0_hz
        };
        let decay = (0.6 * period).round() as usize;
        // Jump to full contact at the epoch, then release linearly.
        for i in 0..decay {
            if t + i < n {
                let v = 1.0 - i as f64 / decay as f64;
                if v > egg[t + i] {
                    egg[t + i] = v;
                }
            }
        }
    }
    Waveform::from_parts(egg, rate)
}

/// Amplitude of the smooth per-cycle flow component relative to the unit
/// excitation impulses, and its phase lead as a fraction of the cycle.
/// Together they place the waveform's pitch-rate minimum slightly before
/// each epoch, the phase relation real voiced speech exhibits.
const FLOW_AMPLITUDE: f64 = 0.08;
const FLOW_LEAD: f64 = 0.10;

/// Add a zero-mean cosine per cycle, phase-locked to the epochs, so the
/// waveform minimum at the pitch rate precedes each epoch by `FLOW_LEAD`
/// of the cycle. A bare impulse train puts that minimum half a cycle away
/// from the epochs — the opposite of natural voiced speech, where the
/// closing phase of the glottal flow depresses the waveform just before
/// closure. The component is smooth and small, so the prediction residual
/// keeps its unit spike exactly at each epoch.
fn add_flow_component(exc: &mut [f64], epochs: &[usize], nominal_period: f64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let len = exc.len() as i64;
    let mut cycle = |start: i64, end: i64, anchor: i64, period: f64| {
        for t in start.max(0)..end.min(len) {
            let phase = ((t - anchor) as f64 / period + FLOW_LEAD) * two_pi;
            exc[t as usize] -= FLOW_AMPLITUDE * phase.cos();
        }
    };
    match epochs {
        [] => {}
        [lone] => {
            cycle(0, len, *lone as i64, nominal_period);
        }
        _ => {
            let first = epochs[0] as i64;
            let last = *epochs.last().unwrap() as i64;
            cycle(0, first, first, (epochs[1] - epochs[0]) as f64);
            for k in 0..epochs.len() - 1 {
                let (a, b) = (epochs[k] as i64, epochs[k + 1] as i64);
                cycle(a, b, a, (b - a) as f64);
            }
            let last_period = (last - epochs[epochs.len() - 2] as i64) as f64;
            cycle(last, len, last, last_period);
        }
    }
}

/// Impulse-train-excited synthetic voice with known epochs. Each cycle also
/// carries a smooth glottal-flow component (see [`add_flow_component`]) so
/// the waveform, like real speech, reaches its pitch-rate minimum just
/// before each closure.
pub fn synthesize_voice(spec: &VoiceSpec) -> SyntheticVoice {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = (spec.duration_s * spec.sample_rate_hz).round() as usize;
    let tract = random_tract(spec.tract_order, spec.sample_rate_hz, &mut rng);
    let epochs = jittered_epochs(spec, &mut rng);
    let mut exc = vec![0.0; n];
    for &t in &epochs {
        exc[t] = 1.0;
    }
    add_flow_component(&mut exc, &epochs, spec.sample_rate_hz / spec.f0_hz);
    let mut speech = tract.synthesize(&exc);
    normalize_rms(&mut speech, 0.1);
    SyntheticVoice {
        speech: Waveform::from_parts(speech, spec.sample_rate_hz),
        epochs: GciSequence::from_sorted("truth", epochs.iter().map(|&t| t as f64).collect()),
        egg: egg_from_epochs(&epochs, n, spec.sample_rate_hz, spec.f0_hz),
    }
}

/// Mixed-phase synthetic voice: each cycle is excited by an anticausal
/// (maximum-phase) glottal pulse that grows toward the epoch and stops
/// abruptly there, then shaped by a minimum-phase tract. Suitable for
/// exercising cepstral decomposition.
pub fn synthesize_mixed_phase_voice(spec: &VoiceSpec) -> SyntheticVoice {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = (spec.duration_s * spec.sample_rate_hz).round() as usize;
    let tract = random_tract(spec.tract_order, spec.sample_rate_hz, &mut rng);
    let epochs = jittered_epochs(spec, &mut rng);
    let period = spec.sample_rate_hz / spec.f0_hz;
    let pulse = anticausal_glottal_pulse(period, spec.sample_rate_hz);
    let mut exc = vec![0.0; n];
    for &t in &epochs {
        for (j, &p) in pulse.iter().enumerate() {
            // Pulse sample j sits at time t - (len - 1 - j).
            let offset = pulse.len() - 1 - j;
            if t >= offset {
                exc[t - offset] += p;
            }
        }
    }
    let mut speech = tract.synthesize(&exc);
    normalize_rms(&mut speech, 0.1);
    SyntheticVoice {
        speech: Waveform::from_parts(speech, spec.sample_rate_hz),
        epochs: GciSequence::from_sorted("truth", epochs.iter().map(|&t| t as f64).collect()),
        egg: egg_from_epochs(&epochs, n, spec.sample_rate_hz, spec.f0_hz),
    }
}

/// Open-phase glottal flow derivative: a low-frequency oscillation under an
/// exponentially growing envelope, ending (maximal) at the epoch. All its
/// energy precedes the excitation instant, making it maximum phase.
fn anticausal_glottal_pulse(period_samples: f64, rate: f64) -> Vec<f64> {
    let len = (0.9 * period_samples).round().max(8.0) as usize;
    let growth = (4.6 / len as f64).exp(); // ~ -40 dB at the pulse onset
    let glottal_hz = 220.0;
    let mut pulse = Vec::with_capacity(len);
    let mut env = (4.6_f64).exp().recip();
    for j in 0..len {
        let m = (len - 1 - j) as f64; // samples before the epoch
        let phase = 2.0 * std::f64::consts::PI * glottal_hz * m / rate;
        pulse.push(-env * phase.cos());
        env *= growth;
    }
    // End on the largest (closing) sample.
    let scale = 1.0 / pulse.last().map(|v| v.abs()).unwrap_or(1.0).max(1e-12);
    for v in &mut pulse {
        *v *= -scale;
    }
    pulse
}

fn normalize_rms(x: &mut [f64], target: f64) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        let g = target / rms;
        for v in x.iter_mut() {
            *v *= g;
        }
    }
}

/// The standard 60 s evaluation suite: three fundamental frequencies, four
/// 5 s utterances each, distinct tracts and jitter streams per utterance.
pub fn standard_suite(seed: u64) -> Vec<SyntheticVoice> {
    let mut out = Vec::new();
    for (i, &f0) in [100.0, 160.0, 220.0].iter().enumerate() {
        for j in 0..4 {
            let spec = VoiceSpec::new(f0, 5.0, seed ^ ((i as u64) << 8) ^ j);
            out.push(synthesize_voice(&spec));
        }
    }
    out
}
