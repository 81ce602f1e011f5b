//! Glottal closure instant (GCI) detection and voice analysis.
//!
//! This crate provides five GCI detectors operating on speech sampled
//! around 16 kHz, an EGG-referenced evaluation engine, reproducible noise
//! and reverberation degradations, and a mixed-phase (complex cepstrum)
//! decomposition with a spectral success test.

pub mod degrade;
pub mod detect;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod harness;
pub mod mixedphase;
pub mod signal;
pub mod synth;
pub mod wav;
pub mod window;

pub use degrade::{add_noise, convolve_rir, simulate_rir, NoiseKind, NoiseSpec, RoomSpec};
pub use error::{Error, Result};
pub use eval::{align_egg, evaluate, reference_gcis, Cycle, EvalOutcomes, EvalReport, HistogramBin, ReferenceCycles};
pub use harness::{
    bench_rct, ensure_polarity, estimate_pitch_prior, run_experiment, run_noise_sweep,
    run_reverb_sweep, DatasetManifest, Degradation, ExperimentReport, ManifestEntry, Method,
    PolarityOutcome, RctReport, Sweep,
};
pub use mixedphase::{decompose, failure_rate, DecompositionConfig, FrameDecomposition};
pub use signal::{GciSequence, PitchPrior, Waveform};
pub use wav::{read_wav, write_wav};
pub use window::{WindowShape, WindowSpec};

