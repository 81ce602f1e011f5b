//! Short-term linear-prediction analysis and inverse filtering.
//!
//! Speech is modeled per frame as an autoregressive process; the residual
//! obtained by prediction-error filtering concentrates the glottal
//! excitation into sharp pulses that the detectors feed on. Analysis uses
//! the autocorrelation method (Hamming-windowed frames, Levinson-Durbin),
//! which keeps every synthesis filter minimum phase.

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::window;

/// Framing and model-order settings for linear-prediction analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpcConfig {
    /// Model order (predictor taps).
    pub order: usize,
    /// Analysis frame length in samples.
    pub frame_len: usize,
    /// Hop between consecutive frames in samples.
    pub hop: usize,
    /// First-order preemphasis coefficient applied before analysis.
    pub preemphasis: f64,
}

impl LpcConfig {
    /// Conventional settings for a given sample rate: order `2 + fs/1000`,
    /// 25 ms frames, 5 ms hop, preemphasis 0.97.
    pub fn for_rate(sample_rate_hz: f64) -> Self {
        Self {
            order: 2 + (sample_rate_hz / 1000.0).round() as usize,
            frame_len: (0.025 * sample_rate_hz).round() as usize,
            hop: (0.005 * sample_rate_hz).round() as usize,
            preemphasis: 0.97,
        }
    }

    fn validate(&self, input_len: usize) -> Result<()> {
        if self.order == 0 || self.hop == 0 || self.frame_len == 0 {
            return Err(Error::InvalidConfig(
                "order, frame length and hop must be nonzero".into(),
            ));
        }
        if self.order >= self.frame_len {
            return Err(Error::InvalidConfig(format!(
                "model order {} must be below the frame length {}",
                self.order, self.frame_len
            )));
        }
        if input_len < self.frame_len {
            return Err(Error::TooShort { needed: self.frame_len, got: input_len });
        }
        Ok(())
    }
}

/// One frame's predictor: coefficients `a_1..a_p` of
/// `x^(n) = sum_k a_k x(n - k)`.
///
/// The all-zero model (every `a_k = 0`) is the identity: its residual is the
/// input itself. Degenerate frames (no energy) yield the identity model.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    coefficients: Vec<f64>,
}

impl LpcModel {
    pub fn identity(order: usize) -> Self {
        Self { coefficients: vec![0.0; order] }
    }

    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// Predictor coefficients `a_1..a_p`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_identity(&self) -> bool {
        self.coefficients.iter().all(|&a| a == 0.0)
    }

    /// Prediction error of `x` with zero initial history.
    pub fn prediction_error(&self, x: &[f64]) -> Vec<f64> {
        let mut e = Vec::with_capacity(x.len());
        for n in 0..x.len() {
            let mut pred = 0.0;
            for (k, &a) in self.coefficients.iter().enumerate() {
                if n > k {
                    pred += a * x[n - 1 - k];
                }
            }
            e.push(x[n] - pred);
        }
        e
    }

    /// All-pole synthesis from an excitation, zero initial state. Inverse of
    /// [`prediction_error`](Self::prediction_error).
    pub fn synthesize(&self, excitation: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(excitation.len());
        for n in 0..excitation.len() {
            let mut v = excitation[n];
            for (k, &a) in self.coefficients.iter().enumerate() {
                if n > k {
                    v += a * y[n - 1 - k];
                }
            }
            y.push(v);
        }
        y
    }
}

/// Biased autocorrelation of `frame` for lags `0..=max_lag`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    let n = frame.len();
    let mut r = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        if lag >= n {
            r.push(0.0);
            break;
        }
        let mut acc = 0.0;
        for i in lag..n {
            acc += frame[i] * frame[i - lag];
        }
        r.push(acc);
    }
    r.resize(max_lag + 1, 0.0);
    r
}

/// Levinson-Durbin recursion. Returns predictor coefficients `a_1..a_p` and
/// the reflection coefficients, which lie strictly inside (-1, 1) whenever
/// the autocorrelation comes from a nonzero real frame.
pub fn levinson(r: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(r.len() > order, "need {} lags, got {}", order + 1, r.len());
    let mut a = vec![0.0; order];
    let mut k = vec![0.0; order];
    if r[0] <= 0.0 {
        return (a, k);
    }
    // Tiny diagonal loading keeps the recursion away from |k| = 1 on
    // pathologically predictable frames.
    let r0 = r[0] * (1.0 + 1e-9);
    let mut err = r0;
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc -= a[j] * r[i - j];
        }
        let ki = acc / err;
        k[i] = ki;
        let prev = a[..i].to_vec();
        a[i] = ki;
        for j in 0..i {
            a[j] = prev[j] - ki * prev[i - 1 - j];
        }
        err *= 1.0 - ki * ki;
        if err <= 0.0 {
            break;
        }
    }
    (a, k)
}

/// First-order preemphasis `y(n) = x(n) - alpha x(n-1)`, `y(0) = x(0)`.
pub fn preemphasize(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &v in x {
        y.push(v - alpha * prev);
        prev = v;
    }
    y
}

/// Per-frame linear-prediction models of the preemphasized input.
///
/// Frame `f` starts at `f * hop`; the last frame is the last one that fits
/// entirely. Zero-energy frames produce the identity model.
pub fn lpc_analyze(x: &Waveform, cfg: &LpcConfig) -> Result<Vec<LpcModel>> {
    cfg.validate(x.len())?;
    let pre = preemphasize(x.samples(), cfg.preemphasis);
    analyze_frames(&pre, cfg, None)
}

/// As [`lpc_analyze`], computing only the frames whose index satisfies
/// `wanted`; unwanted slots hold the identity model.
fn analyze_frames(
    pre: &[f64],
    cfg: &LpcConfig,
    wanted: Option<&dyn Fn(usize) -> bool>,
) -> Result<Vec<LpcModel>> {
    let n_frames = (pre.len() - cfg.frame_len) / cfg.hop + 1;
    let win = window::hamming(cfg.frame_len);
    let mut frame = vec![0.0; cfg.frame_len];
    let mut models = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        if let Some(pred) = wanted {
            if !pred(f) {
                models.push(LpcModel::identity(cfg.order));
                continue;
            }
        }
        let start = f * cfg.hop;
        for (i, w) in win.iter().enumerate() {
            frame[i] = pre[start + i] * w;
        }
        let r = autocorrelation(&frame, cfg.order);
        if r[0] <= 0.0 {
            models.push(LpcModel::identity(cfg.order));
        } else {
            let (a, _k) = levinson(&r, cfg.order);
            models.push(LpcModel::from_coefficients(a));
        }
    }
    Ok(models)
}

/// Index of the model governing sample `n`: the frame whose center is
/// nearest, piecewise constant over hop-length segments.
#[inline]
fn model_index(n: usize, cfg: &LpcConfig, n_models: usize) -> usize {
    let lead = (cfg.frame_len - cfg.hop) / 2;
    (n.saturating_sub(lead) / cfg.hop).min(n_models - 1)
}

/// Prediction-error filtering of `target` using piecewise-constant models.
/// The filter is FIR in the input, so switching models at hop boundaries
/// introduces no state discontinuities.
pub fn inverse_filter(target: &[f64], models: &[LpcModel], cfg: &LpcConfig) -> Vec<f64> {
    assert!(!models.is_empty());
    let mut e = Vec::with_capacity(target.len());
    for n in 0..target.len() {
        let m = &models[model_index(n, cfg, models.len())];
        let mut pred = 0.0;
        for (k, &a) in m.coefficients().iter().enumerate() {
            if n > k {
                pred += a * target[n - 1 - k];
            }
        }
        e.push(target[n] - pred);
    }
    e
}

/// Linear-prediction residual: the preemphasized input passed through its
/// own prediction-error filter. Sharp positive pulses mark the excitation.
pub fn lp_residual(x: &Waveform, cfg: &LpcConfig) -> Result<Waveform> {
    cfg.validate(x.len())?;
    let pre = preemphasize(x.samples(), cfg.preemphasis);
    let models = analyze_frames(&pre, cfg, None)?;
    Ok(x.with_samples(inverse_filter(&pre, &models, cfg)))
}

/// Voice-source estimate: the *non*-preemphasized input inverse-filtered
/// with coefficients from the usual preemphasized analysis. Approximates
/// the glottal flow derivative.
pub fn voice_source(x: &Waveform, cfg: &LpcConfig) -> Result<Waveform> {
    cfg.validate(x.len())?;
    let pre = preemphasize(x.samples(), cfg.preemphasis);
    let models = analyze_frames(&pre, cfg, None)?;
    Ok(x.with_samples(inverse_filter(x.samples(), &models, cfg)))
}

/// Residual values restricted to `ranges` (half-open sample ranges), fetching
/// only the analysis frames that govern those samples. Entries outside every
/// range are zero. Inside the ranges the values equal [`lp_residual`]'s.
pub fn lp_residual_in_ranges(
    x: &Waveform,
    cfg: &LpcConfig,
    ranges: &[(usize, usize)],
) -> Result<Vec<f64>> {
    cfg.validate(x.len())?;
    let pre = preemphasize(x.samples(), cfg.preemphasis);
    let n_frames = (pre.len() - cfg.frame_len) / cfg.hop + 1;
    let mut needed = vec![false; n_frames];
    for &(a, b) in ranges {
        for n in a..b.min(pre.len()) {
            needed[model_index(n, cfg, n_frames)] = true;
        }
    }
    let models = analyze_frames(&pre, cfg, Some(&|f| needed[f]))?;
    let mut e = vec![0.0; pre.len()];
    for &(a, b) in ranges {
        for n in a..b.min(pre.len()) {
            let m = &models[model_index(n, cfg, models.len())];
            let mut pred = 0.0;
            for (k, &ak) in m.coefficients().iter().enumerate() {
                if n > k {
                    pred += ak * pre[n - 1 - k];
                }
            }
            e[n] = pre[n] - pred;
        }
    }
    Ok(e)
}
