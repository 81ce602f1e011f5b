//! Corpus experiments: manifests, polarity and pitch-prior handling,
//! clean/noise/reverberation runs, and computation-time benchmarks.
//!
//! The entry point is [`run_experiment`]: it walks a [`DatasetManifest`]
//! of speech/EGG pairs, fixes polarity, optionally degrades the speech,
//! runs the requested detectors, scores them against the EGG reference,
//! and pools the per-cycle outcomes into one [`EvalReport`] per method.
//! [`run_noise_sweep`] and [`run_reverb_sweep`] repeat that over a
//! condition axis, and [`bench_rct`] measures each detector's CPU cost
//! relative to the audio duration it processes.
//!
//! Runs with fixed seeds are reproducible byte for byte: files are
//! processed in parallel but reduced in manifest order, and every
//! stochastic degradation derives its per-file seed from the configured
//! base seed and the file's position.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degrade::{add_noise, convolve_rir, simulate_rir, NoiseSpec, RoomSpec};
use crate::detect::{
    detect_dypsa, detect_he, detect_he_fast, detect_sedreams, detect_sedreams_fast, detect_yaga,
    detect_zfr,
};
use crate::dsp::lpc::{autocorrelation, lp_residual, LpcConfig};
use crate::dsp::resample::resample;
use crate::error::{Error, Result};
use crate::eval::{align_egg, evaluate, sig6, EvalOutcomes, EvalReport, ReferenceCycles};
use crate::signal::{GciSequence, PitchPrior, Waveform, MAX_F0_HZ, MIN_F0_HZ};
use crate::wav::read_wav;

/// Analysis sample rate; manifest audio at any other rate is resampled
/// to this before anything touches it.
pub const ANALYSIS_RATE_HZ: f64 = 16000.0;

/// Largest EGG-to-microphone delay the automatic alignment searches.
pub const MAX_EGG_DELAY_MS: f64 = 5.0;

/// Residual skewness magnitude below which polarity is not called.
pub const POLARITY_SKEWNESS_MIN: f64 = 0.1;

// ---------------------------------------------------------------------------
// Method dispatch

/// One of the available GCI detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    He,
    HeFast,
    Dypsa,
    Zfr,
    Sedreams,
    SedreamsFast,
    Yaga,
}

impl Method {
    /// Every dispatchable detector, accelerated variants included.
    pub const ALL: [Method; 7] = [
        Method::He,
        Method::HeFast,
        Method::Dypsa,
        Method::Zfr,
        Method::Sedreams,
        Method::SedreamsFast,
        Method::Yaga,
    ];

    /// The five full-strength detectors compared throughout.
    pub const CORE: [Method; 5] = [
        Method::He,
        Method::Dypsa,
        Method::Zfr,
        Method::Sedreams,
        Method::Yaga,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::He => "he",
            Method::HeFast => "he-fast",
            Method::Dypsa => "dypsa",
            Method::Zfr => "zfr",
            Method::Sedreams => "sedreams",
            Method::SedreamsFast => "sedreams-fast",
            Method::Yaga => "yaga",
        }
    }

    /// Runs this detector with its default configuration.
    pub fn detect(self, x: &Waveform, prior: &PitchPrior) -> Result<GciSequence> {
        match self {
            Method::He => detect_he(x, prior),
            Method::HeFast => detect_he_fast(x, prior),
            Method::Dypsa => detect_dypsa(x, prior),
            Method::Zfr => detect_zfr(x, prior),
            Method::Sedreams => detect_sedreams(x, prior),
            Method::SedreamsFast => detect_sedreams_fast(x, prior),
            Method::Yaga => detect_yaga(x, prior),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == normalized)
            .ok_or_else(|| {
                let known: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown method '{s}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

// ---------------------------------------------------------------------------
// Manifest

/// One speech/EGG recording pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Microphone recording (16-bit mono PCM WAV).
    pub speech: PathBuf,
    /// Contemporaneous EGG recording.
    pub egg: PathBuf,
    pub speaker: String,
    /// EGG-behind-microphone delay in milliseconds, set when the
    /// automatic alignment should not be trusted for this pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment_ms: Option<f64>,
}

/// A dataset description: recording pairs plus optional per-speaker mean
/// pitch. Speakers missing from `f0_hz` get their prior estimated from
/// the data (see [`estimate_pitch_prior`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Mean fundamental frequency per speaker id, in Hz.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub f0_hz: BTreeMap<String, f64>,
}

impl DatasetManifest {
    /// Reads a JSON manifest. Relative audio paths are resolved against
    /// the manifest's own directory, and the result is validated.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            for entry in &mut manifest.entries {
                entry.speech = resolve(base, &entry.speech);
                entry.egg = resolve(base, &entry.egg);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    /// Checks that the manifest is usable: at least one entry, every
    /// referenced file present, and every given pitch inside the
    /// supported range.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Manifest("manifest lists no recordings".into()));
        }
        for entry in &self.entries {
            for path in [&entry.speech, &entry.egg] {
                if !path.is_file() {
                    return Err(Error::Manifest(format!("missing file {}", path.display())));
                }
            }
        }
        for (speaker, &f0) in &self.f0_hz {
            PitchPrior::from_f0_hz(f0, ANALYSIS_RATE_HZ)
                .map_err(|e| Error::Manifest(format!("speaker {speaker}: {e}")))?;
        }
        Ok(())
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Reads a WAV file and brings it to the analysis rate.
fn load_audio(path: &Path) -> Result<Waveform> {
    let x = read_wav(path)?;
    if (x.sample_rate_hz() - ANALYSIS_RATE_HZ).abs() > f64::EPSILON {
        resample(&x, ANALYSIS_RATE_HZ)
    } else {
        Ok(x)
    }
}

// ---------------------------------------------------------------------------
// Polarity

/// Result of the automatic polarity check.
#[derive(Debug, Clone)]
pub struct PolarityOutcome {
    /// The input, negated if its polarity was inverted.
    pub waveform: Waveform,
    pub flipped: bool,
    /// False when the residual skewness sits too close to zero to call
    /// either way; the waveform is then passed through unchanged.
    pub confident: bool,
}

/// Ensures the speech has positive polarity, i.e. that glottal closures
/// excite positive spikes in the prediction residual. The call is
/// idempotent: a corrected waveform shows positive skewness and passes
/// through unchanged.
pub fn ensure_polarity(x: &Waveform) -> Result<PolarityOutcome> {
    let cfg = LpcConfig::for_rate(x.sample_rate_hz());
    let residual = lp_residual(x, &cfg)?;
    // The predictor has no history over the first frame, so the onset
    // transient there would read as a spurious excitation spike.
    let body = match residual.samples().get(cfg.frame_len..) {
        Some(tail) if tail.len() >= cfg.frame_len => tail,
        _ => residual.samples(),
    };
    let skew = skewness(body);
    // An almost exactly predictable signal (a pure tone, say) leaves a
    // residual of numerical dust whose shape means nothing.
    let excited = rms(body) > 1e-9 * rms(x.samples());
    let confident = excited && skew.abs() >= POLARITY_SKEWNESS_MIN;
    let flipped = confident && skew < 0.0;
    let waveform = if flipped {
        Waveform::new(
            x.samples().iter().map(|s| -s).collect(),
            x.sample_rate_hz(),
        )?
    } else {
        x.clone()
    };
    Ok(PolarityOutcome {
        waveform,
        flipped,
        confident,
    })
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn skewness(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

// ---------------------------------------------------------------------------
// Pitch prior estimation

/// Estimates a speaker's mean-pitch prior. With an EGG recording the
/// estimate is the mean interval between its reference instants; without
/// one it falls back to the strongest autocorrelation lag of the speech
/// inside the supported period band, with a sub-harmonic guard so an
/// octave-down peak of comparable strength does not halve the pitch.
pub fn estimate_pitch_prior(speech: &Waveform, egg: Option<&Waveform>) -> Result<PitchPrior> {
    if let Some(egg) = egg {
        if let Some(prior) = egg_interval_prior(egg)? {
            return Ok(prior);
        }
    }
    autocorrelation_prior(speech)
}

/// Mean reference-instant interval, when the EGG yields enough cycles.
fn egg_interval_prior(egg: &Waveform) -> Result<Option<PitchPrior>> {
    const PROBE_F0_HZ: f64 = 200.0;
    const MIN_INTERVALS: usize = 5;
    let rate = egg.sample_rate_hz();
    let probe = PitchPrior::from_f0_hz(PROBE_F0_HZ, rate)?;
    let instants = crate::eval::reference_gcis(egg, &probe);
    let band = (rate / MAX_F0_HZ)..=(rate / MIN_F0_HZ);
    let periods: Vec<f64> = instants
        .instants()
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|p| band.contains(p))
        .collect();
    if periods.len() < MIN_INTERVALS {
        return Ok(None);
    }
    let mean = periods.iter().sum::<f64>() / periods.len() as f64;
    PitchPrior::from_mean_period(mean, rate).map(Some)
}

fn autocorrelation_prior(x: &Waveform) -> Result<PitchPrior> {
    let rate = x.sample_rate_hz();
    let min_lag = (rate / MAX_F0_HZ).ceil() as usize;
    let max_lag = (rate / MIN_F0_HZ).floor() as usize;
    if x.len() <= max_lag + 1 {
        return Err(Error::TooShort {
            needed: max_lag + 2,
            got: x.len(),
        });
    }
    // Correlation pooled over chunks spread across the file, so voiced
    // stretches dominate silence wherever they happen to sit.
    let chunk = (((rate * 0.060).round() as usize).max(max_lag + 2)).min(x.len());
    let n_chunks = (x.len() / chunk).clamp(1, 32);
    let span = x.len() - chunk;
    let samples = x.samples();
    let mut acc = vec![0.0; max_lag + 1];
    for c in 0..n_chunks {
        let start = if n_chunks == 1 { 0 } else { span * c / (n_chunks - 1) };
        for (lag, v) in autocorrelation(&samples[start..start + chunk], max_lag)
            .iter()
            .enumerate()
        {
            acc[lag] += v;
        }
    }
    if acc[0] <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let peak_in = |lo: usize, hi: usize| {
        (lo..=hi)
            .max_by(|a, b| acc[*a].total_cmp(&acc[*b]))
            .expect("band contains at least one lag")
    };
    let mut best = peak_in(min_lag, max_lag);
    // Sub-harmonic guard: prefer a half-period peak of comparable height.
    loop {
        let half = best / 2;
        if half < min_lag {
            break;
        }
        let cand = peak_in(half.saturating_sub(2).max(min_lag), (half + 2).min(max_lag));
        if acc[cand] >= 0.85 * acc[best] {
            best = cand;
        } else {
            break;
        }
    }
    PitchPrior::from_mean_period(best as f64, rate)
}

// ---------------------------------------------------------------------------
// Experiments

/// A degradation applied to the speech (never to the EGG reference)
/// before detection.
#[derive(Debug, Clone)]
pub enum Degradation {
    /// Additive noise at a target segmental SNR. The spec's seed acts as
    /// the base: each file mixes an independent realization derived from
    /// it and the file's manifest position.
    Noise(NoiseSpec),
    /// Convolution with a simulated room impulse response; the response
    /// is rendered once and shared by every file.
    Reverb(RoomSpec),
}

/// Pooled outcomes for one detector across a run.
#[derive(Debug, Clone)]
pub struct MethodOutcomes {
    pub method: Method,
    pub outcomes: EvalOutcomes,
}

/// Everything a [`run_experiment`] call produced.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// One pooled tally per requested method, in request order.
    pub methods: Vec<MethodOutcomes>,
    /// Files that loaded and produced at least a reference.
    pub files_processed: usize,
    /// Hard per-file or per-method failures, each skipped, none fatal.
    pub failures: Vec<String>,
    /// Soft fallbacks worth knowing about (alignment, polarity).
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn outcomes(&self, method: Method) -> Option<&EvalOutcomes> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| &m.outcomes)
    }

    /// The five-measure summary for one method, if it was requested.
    pub fn report(&self, method: Method) -> Option<EvalReport> {
        self.outcomes(method).map(EvalOutcomes::report)
    }

    /// Summary table: one CSV row of the five measures per method.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,idr_pct,mr_pct,far_pct,ida_ms,acc025_pct\n");
        for m in &self.methods {
            out.push_str(&format!("{},{}\n", m.method, m.outcomes.report().table_row()));
        }
        out
    }

    /// Timing-error histogram for one method as `bin_center_ms,count`
    /// rows, ready for plotting.
    pub fn histogram_csv(
        &self,
        method: Method,
        bin_width_ms: f64,
        half_range_ms: f64,
    ) -> Option<String> {
        let outcomes = self.outcomes(method)?;
        let mut out = String::from("bin_center_ms,count\n");
        for bin in outcomes.histogram(bin_width_ms, half_range_ms) {
            out.push_str(&format!("{},{}\n", sig6(bin.center_ms), bin.count));
        }
        Some(out)
    }
}

struct FileRun {
    /// One slot per requested method; `None` where that method failed.
    outcomes: Vec<Option<EvalOutcomes>>,
    failures: Vec<String>,
    warnings: Vec<String>,
}

/// Runs the full pipeline over a manifest: load and resample, fix
/// polarity, align the EGG reference, optionally degrade, detect with
/// every requested method, score, and pool the outcomes per method.
///
/// Individual file or method failures are recorded and skipped; the call
/// errors only when nothing at all could be processed. With identical
/// inputs and seeds the report is identical down to the byte.
pub fn run_experiment(
    manifest: &DatasetManifest,
    methods: &[Method],
    degradation: Option<&Degradation>,
) -> Result<ExperimentReport> {
    manifest.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no detection methods requested".into()));
    }
    let (priors, mut failures) = speaker_priors(manifest);
    let rir = match degradation {
        Some(Degradation::Reverb(room)) => Some(simulate_rir(room, ANALYSIS_RATE_HZ)?),
        _ => None,
    };
    let runs: Vec<Result<FileRun>> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(index, entry)| match priors.get(&entry.speaker) {
            Some(prior) => run_entry(entry, prior, degradation, rir.as_deref(), methods, index),
            None => Err(Error::Manifest(format!(
                "no usable pitch prior for speaker {}",
                entry.speaker
            ))),
        })
        .collect();

    let mut pooled: Vec<EvalOutcomes> = methods.iter().map(|_| EvalOutcomes::default()).collect();
    let mut warnings = Vec::new();
    let mut files_processed = 0;
    for (entry, run) in manifest.entries.iter().zip(runs) {
        match run {
            Ok(run) => {
                files_processed += 1;
                for (slot, outcome) in pooled.iter_mut().zip(&run.outcomes) {
                    if let Some(outcome) = outcome {
                        slot.merge(outcome);
                    }
                }
                failures.extend(run.failures);
                warnings.extend(run.warnings);
            }
            Err(e) => failures.push(format!("{}: {e}", entry.speech.display())),
        }
    }
    if files_processed == 0 {
        return Err(Error::Manifest(format!(
            "no manifest file could be processed; first failure: {}",
            failures.first().map(String::as_str).unwrap_or("none recorded")
        )));
    }
    Ok(ExperimentReport {
        methods: methods
            .iter()
            .zip(pooled)
            .map(|(&method, outcomes)| MethodOutcomes { method, outcomes })
            .collect(),
        files_processed,
        failures,
        warnings,
    })
}

/// One pitch prior per speaker: taken from the manifest's `f0_hz` map
/// when given, otherwise estimated once from that speaker's first
/// loadable recording pair.
fn speaker_priors(manifest: &DatasetManifest) -> (BTreeMap<String, PitchPrior>, Vec<String>) {
    let mut priors = BTreeMap::new();
    let mut failures = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for entry in &manifest.entries {
        if seen.iter().any(|s| *s == entry.speaker) {
            continue;
        }
        seen.push(&entry.speaker);
        if let Some(&f0) = manifest.f0_hz.get(&entry.speaker) {
            match PitchPrior::from_f0_hz(f0, ANALYSIS_RATE_HZ) {
                Ok(p) => {
                    priors.insert(entry.speaker.clone(), p);
                }
                Err(e) => failures.push(format!("speaker {}: {e}", entry.speaker)),
            }
            continue;
        }
        let mut last_error = None;
        for candidate in manifest.entries.iter().filter(|c| c.speaker == entry.speaker) {
            let estimated = load_audio(&candidate.speech).and_then(|speech| {
                let egg = load_audio(&candidate.egg)?;
                estimate_pitch_prior(&speech, Some(&egg))
            });
            match estimated {
                Ok(p) => {
                    priors.insert(entry.speaker.clone(), p);
                    break;
                }
                Err(e) => last_error = Some(e),
            }
        }
        if !priors.contains_key(&entry.speaker) {
            let detail = last_error.map(|e| e.to_string()).unwrap_or_default();
            failures.push(format!(
                "speaker {}: pitch prior estimation failed: {detail}",
                entry.speaker
            ));
        }
    }
    (priors, failures)
}

fn run_entry(
    entry: &ManifestEntry,
    prior: &PitchPrior,
    degradation: Option<&Degradation>,
    rir: Option<&[f64]>,
    methods: &[Method],
    index: usize,
) -> Result<FileRun> {
    let mut warnings = Vec::new();
    let speech = load_audio(&entry.speech)?;
    let egg = load_audio(&entry.egg)?;

    let polarity = ensure_polarity(&speech)?;
    if !polarity.confident {
        warnings.push(format!(
            "{}: polarity ambiguous, left unchanged",
            entry.speech.display()
        ));
    }
    let speech = polarity.waveform;

    // The reference and its alignment always come from the clean pair;
    // degradation must not move the ground truth.
    let delay = match entry.alignment_ms {
        Some(ms) => egg.ms_to_samples(ms),
        None => match align_egg(&speech, &egg, MAX_EGG_DELAY_MS) {
            Ok(d) => d,
            Err(Error::AlignmentUnreliable { .. }) => {
                warnings.push(format!(
                    "{}: EGG alignment unreliable, assuming zero delay",
                    entry.egg.display()
                ));
                0.0
            }
            Err(e) => return Err(e),
        },
    };
    let reference = ReferenceCycles::from_egg(&egg, prior).shifted(-delay);

    let degraded = match degradation {
        None => speech,
        Some(Degradation::Noise(spec)) => {
            let mut spec = spec.clone();
            spec.seed = per_file_seed(spec.seed, index);
            add_noise(&speech, &spec)?
        }
        Some(Degradation::Reverb(_)) => {
            convolve_rir(&speech, rir.expect("response rendered before the file loop"))
        }
    };

    let mut outcomes = Vec::with_capacity(methods.len());
    let mut failures = Vec::new();
    for &method in methods {
        match method
            .detect(&degraded, prior)
            .and_then(|est| evaluate(&reference, &est))
        {
            Ok(o) => outcomes.push(Some(o)),
            Err(e) => {
                failures.push(format!("{} [{method}]: {e}", entry.speech.display()));
                outcomes.push(None);
            }
        }
    }
    Ok(FileRun {
        outcomes,
        failures,
        warnings,
    })
}

/// Mixes the base seed with the file's position so every file gets an
/// independent but reproducible noise realization.
fn per_file_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

// ---------------------------------------------------------------------------
// Sweeps

/// One condition of a sweep and the full report measured under it.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Condition value as printed in the table (`"clean"`, `"10"`, ...).
    pub label: String,
    pub report: ExperimentReport,
}

/// Reports over a degradation axis, e.g. SNR or reverberation time.
#[derive(Debug, Clone)]
pub struct Sweep {
    /// Name of the condition column, e.g. `"snr_db"`.
    pub condition: String,
    pub points: Vec<SweepPoint>,
}

impl Sweep {
    /// Long-format CSV: one row per condition and method with the five
    /// measures, ready for plotting a measure against the condition.
    pub fn csv(&self) -> String {
        let mut out = format!("{},method,idr_pct,mr_pct,far_pct,ida_ms,acc025_pct\n", self.condition);
        for point in &self.points {
            for m in &point.report.methods {
                out.push_str(&format!(
                    "{},{},{}\n",
                    point.label,
                    m.method,
                    m.outcomes.report().table_row()
                ));
            }
        }
        out
    }

    /// The reports for one method across the sweep, in point order.
    pub fn method_reports(&self, method: Method) -> Vec<(String, EvalReport)> {
        self.points
            .iter()
            .filter_map(|p| p.report.report(method).map(|r| (p.label.clone(), r)))
            .collect()
    }
}

/// Runs the manifest clean and then under additive white noise at each
/// requested segmental SNR. The first point is always labeled `clean`.
pub fn run_noise_sweep(
    manifest: &DatasetManifest,
    methods: &[Method],
    snrs_db: &[f64],
    seed: u64,
) -> Result<Sweep> {
    let mut points = vec![SweepPoint {
        label: "clean".into(),
        report: run_experiment(manifest, methods, None)?,
    }];
    for &snr in snrs_db {
        let degradation = Degradation::Noise(NoiseSpec::white(snr, seed));
        points.push(SweepPoint {
            label: sig6(snr).to_string(),
            report: run_experiment(manifest, methods, Some(&degradation))?,
        });
    }
    Ok(Sweep {
        condition: "snr_db".into(),
        points,
    })
}

/// Runs the manifest under simulated reverberation for each requested
/// decay time, using the standard 3 m × 4 m × 5 m room.
pub fn run_reverb_sweep(
    manifest: &DatasetManifest,
    methods: &[Method],
    t60s_ms: &[f64],
) -> Result<Sweep> {
    let mut points = Vec::with_capacity(t60s_ms.len());
    for &t60_ms in t60s_ms {
        let degradation = Degradation::Reverb(RoomSpec::shoebox(t60_ms / 1000.0));
        points.push(SweepPoint {
            label: sig6(t60_ms).to_string(),
            report: run_experiment(manifest, methods, Some(&degradation))?,
        });
    }
    Ok(Sweep {
        condition: "t60_ms".into(),
        points,
    })
}

// ---------------------------------------------------------------------------
// Computation-time benchmark

/// CPU cost of one detector relative to the audio duration it consumed.
#[derive(Debug, Clone)]
pub struct RctReport {
    pub method: Method,
    /// `100 × cpu_seconds / audio_seconds`.
    pub rct_pct: f64,
    pub audio_seconds: f64,
    pub cpu_seconds: f64,
}

/// Measures each method's relative computation time over preloaded
/// material. One untimed warm-up pass per method precedes `repetitions`
/// timed passes; the reported CPU time is their median, measured with
/// the thread CPU clock so other load on the machine does not leak in.
/// Only detection is timed — the material is already decoded.
pub fn bench_rct(
    methods: &[Method],
    material: &[(Waveform, PitchPrior)],
    repetitions: usize,
) -> Result<Vec<RctReport>> {
    if material.is_empty() {
        return Err(Error::InvalidConfig("no audio to benchmark".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no detection methods requested".into()));
    }
    let audio_seconds: f64 = material.iter().map(|(x, _)| x.duration_s()).sum();
    let repetitions = repetitions.max(1);
    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        for (x, prior) in material {
            method.detect(x, prior)?;
        }
        let mut times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = thread_cpu_seconds();
            for (x, prior) in material {
                std::hint::black_box(method.detect(x, prior)?);
            }
            times.push(thread_cpu_seconds() - start);
        }
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        let cpu_seconds = if times.len() % 2 == 1 {
            times[mid]
        } else {
            (times[mid - 1] + times[mid]) / 2.0
        };
        reports.push(RctReport {
            method,
            rct_pct: 100.0 * cpu_seconds / audio_seconds,
            audio_seconds,
            cpu_seconds,
        });
    }
    Ok(reports)
}

/// Methods sorted fastest first, for cross-platform comparison where the
/// absolute numbers mean little but the ordering travels.
pub fn rct_ordering(reports: &[RctReport]) -> Vec<Method> {
    let mut sorted: Vec<&RctReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.rct_pct.total_cmp(&b.rct_pct));
    sorted.into_iter().map(|r| r.method).collect()
}

/// CPU time consumed by the calling thread, in seconds.
fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "thread CPU clock unavailable");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_voice, SyntheticVoice, VoiceSpec};
    use crate::wav::write_wav;
    use std::path::Path;

    fn voice(f0: f64, seconds: f64, seed: u64) -> SyntheticVoice {
        synthesize_voice(&VoiceSpec::new(f0, seconds, seed))
    }

    fn write_pair(dir: &Path, stem: &str, v: &SyntheticVoice) -> (PathBuf, PathBuf) {
        let speech = dir.join(format!("{stem}.wav"));
        let egg = dir.join(format!("{stem}_egg.wav"));
        write_wav(&speech, &v.speech).unwrap();
        write_wav(&egg, &v.egg).unwrap();
        (speech, egg)
    }

    fn manifest_for(dir: &Path, voices: &[(&str, f64, &SyntheticVoice)]) -> DatasetManifest {
        let mut manifest = DatasetManifest::default();
        for (stem, f0, v) in voices {
            let (speech, egg) = write_pair(dir, stem, v);
            manifest.entries.push(ManifestEntry {
                speech,
                egg,
                speaker: (*stem).to_string(),
                alignment_ms: None,
            });
            manifest.f0_hz.insert((*stem).to_string(), *f0);
        }
        manifest
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert_eq!("SEDREAMS_FAST".parse::<Method>().unwrap(), Method::SedreamsFast);
        assert!("unknown".parse::<Method>().is_err());
    }

    #[test]
    fn manifest_resolves_relative_paths_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let v = voice(120.0, 0.3, 1);
        write_pair(dir.path(), "a", &v);
        let json = r#"{
            "entries": [{"speech": "a.wav", "egg": "a_egg.wav", "speaker": "s1"}],
            "f0_hz": {"s1": 120.0}
        }"#;
        let path = dir.path().join("set.json");
        std::fs::write(&path, json).unwrap();
        let manifest = DatasetManifest::from_file(&path).unwrap();
        assert_eq!(manifest.entries[0].speech, dir.path().join("a.wav"));
        assert!(manifest.entries[0].egg.is_file());

        let broken = r#"{"entries": [{"speech": "missing.wav", "egg": "a_egg.wav", "speaker": "s1"}]}"#;
        std::fs::write(&path, broken).unwrap();
        let err = DatasetManifest::from_file(&path).unwrap_err();
        assert!(matches!(err, Error::Manifest(_)), "got {err:?}");
    }

    #[test]
    fn polarity_flip_is_detected_and_idempotent() {
        for seed in [3, 11] {
            let v = voice(130.0, 0.8, seed);
            let first = ensure_polarity(&v.speech).unwrap();
            assert!(!first.flipped && first.confident);

            let negated = Waveform::new(
                v.speech.samples().iter().map(|s| -s).collect(),
                v.speech.sample_rate_hz(),
            )
            .unwrap();
            let fixed = ensure_polarity(&negated).unwrap();
            assert!(fixed.flipped && fixed.confident);
            assert_eq!(fixed.waveform.samples(), v.speech.samples());

            let again = ensure_polarity(&fixed.waveform).unwrap();
            assert!(!again.flipped);
            assert_eq!(again.waveform.samples(), v.speech.samples());
        }
    }

    #[test]
    fn symmetric_signal_leaves_polarity_uncalled() {
        let rate = 16000.0;
        let sine: Vec<f64> = (0..8000)
            .map(|n| (2.0 * std::f64::consts::PI * 100.0 * n as f64 / rate).sin())
            .collect();
        let outcome = ensure_polarity(&Waveform::new(sine, rate).unwrap()).unwrap();
        assert!(!outcome.confident);
        assert!(!outcome.flipped);
    }

    #[test]
    fn pitch_prior_follows_the_egg_intervals() {
        let v = voice(160.0, 1.0, 9);
        let prior = estimate_pitch_prior(&v.speech, Some(&v.egg)).unwrap();
        let truth = 16000.0 / 160.0;
        assert!(
            (prior.mean_period_samples() - truth).abs() / truth < 0.05,
            "estimated {} samples, expected about {truth}",
            prior.mean_period_samples()
        );
    }

    #[test]
    fn pitch_prior_from_speech_alone_lands_near_the_truth() {
        let v = voice(160.0, 1.0, 9);
        let prior = estimate_pitch_prior(&v.speech, None).unwrap();
        let truth = 16000.0 / 160.0;
        assert!(
            (prior.mean_period_samples() - truth).abs() / truth < 0.10,
            "estimated {} samples, expected about {truth}",
            prior.mean_period_samples()
        );
    }

    #[test]
    fn single_file_experiment_reports_consistent_rates() {
        let dir = tempfile::tempdir().unwrap();
        let v = voice(130.0, 1.2, 3);
        let manifest = manifest_for(dir.path(), &[("s1", 130.0, &v)]);
        let report = run_experiment(&manifest, &[Method::Sedreams], None).unwrap();

        assert_eq!(report.files_processed, 1);
        assert!(report.failures.is_empty(), "failures: {:?}", report.failures);
        let summary = report.report(Method::Sedreams).unwrap();
        assert!(
            (summary.idr_pct + summary.mr_pct + summary.far_pct - 100.0).abs() < 1e-9,
            "rates must partition the cycles"
        );
        assert!(summary.idr_pct > 90.0, "IDR {}", summary.idr_pct);

        let csv = report.summary_csv();
        assert!(csv.starts_with("method,idr_pct"));
        assert_eq!(csv.lines().count(), 2);
        let hist = report.histogram_csv(Method::Sedreams, 0.1, 2.0).unwrap();
        let total: usize = hist
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, report.outcomes(Method::Sedreams).unwrap().identified);
    }

    #[test]
    fn corrupt_file_is_logged_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let v = voice(120.0, 0.8, 5);
        let mut manifest = manifest_for(dir.path(), &[("good", 120.0, &v)]);
        let bogus = dir.path().join("bad.wav");
        std::fs::write(&bogus, b"not audio at all").unwrap();
        manifest.entries.push(ManifestEntry {
            speech: bogus.clone(),
            egg: manifest.entries[0].egg.clone(),
            speaker: "good".into(),
            alignment_ms: None,
        });

        let report = run_experiment(&manifest, &[Method::Zfr], None).unwrap();
        assert_eq!(report.files_processed, 1);
        assert_eq!(report.failures.len(), 1);
        assert!(report.failures[0].contains("bad.wav"), "{:?}", report.failures);
    }

    #[test]
    fn noisy_runs_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let a = voice(110.0, 0.8, 21);
        let b = voice(180.0, 0.8, 22);
        let manifest = manifest_for(dir.path(), &[("a", 110.0, &a), ("b", 180.0, &b)]);
        let degradation = Degradation::Noise(NoiseSpec::white(10.0, 77));

        let first = run_experiment(&manifest, &[Method::Sedreams], Some(&degradation)).unwrap();
        let second = run_experiment(&manifest, &[Method::Sedreams], Some(&degradation)).unwrap();
        assert_eq!(first.summary_csv(), second.summary_csv());
        assert_eq!(
            first.outcomes(Method::Sedreams).unwrap().errors_ms,
            second.outcomes(Method::Sedreams).unwrap().errors_ms
        );
        assert_eq!(first.failures, second.failures);
    }

    #[test]
    fn noise_sweep_starts_clean_and_tabulates_conditions() {
        let dir = tempfile::tempdir().unwrap();
        let v = voice(140.0, 0.8, 8);
        let manifest = manifest_for(dir.path(), &[("s", 140.0, &v)]);
        let sweep = run_noise_sweep(&manifest, &[Method::Zfr], &[10.0], 4).unwrap();

        let labels: Vec<&str> = sweep.points.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["clean", "10"]);
        let csv = sweep.csv();
        assert!(csv.starts_with("snr_db,method,idr_pct"));
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(sweep.method_reports(Method::Zfr).len(), 2);
    }

    #[test]
    fn reverberant_run_completes() {
        let dir = tempfile::tempdir().unwrap();
        let v = voice(120.0, 0.8, 13);
        let manifest = manifest_for(dir.path(), &[("s", 120.0, &v)]);
        let mut room = RoomSpec::shoebox(0.15);
        room.calibrate = false;
        let report =
            run_experiment(&manifest, &[Method::Zfr], Some(&Degradation::Reverb(room))).unwrap();
        assert_eq!(report.files_processed, 1);
        let summary = report.report(Method::Zfr).unwrap();
        assert!(summary.idr_pct > 0.0);
    }

    #[test]
    fn bench_reports_positive_cost_and_a_total_ordering() {
        let v = voice(120.0, 2.0, 17);
        let prior = PitchPrior::from_f0_hz(120.0, 16000.0).unwrap();
        let material = vec![(v.speech, prior)];
        let reports = bench_rct(
            &[Method::Sedreams, Method::SedreamsFast],
            &material,
            3,
        )
        .unwrap();

        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert!(r.rct_pct > 0.0 && r.cpu_seconds > 0.0);
            assert!((r.audio_seconds - 2.0).abs() < 0.01);
            assert!(
                (r.rct_pct - 100.0 * r.cpu_seconds / r.audio_seconds).abs() < 1e-9,
                "definition must hold"
            );
        }
        let order = rct_ordering(&reports);
        assert_eq!(order.len(), 2);
        let costs: Vec<f64> = order
            .iter()
            .map(|m| reports.iter().find(|r| r.method == *m).unwrap().rct_pct)
            .collect();
        assert!(costs.windows(2).all(|w| w[0] <= w[1]));
    }
}
