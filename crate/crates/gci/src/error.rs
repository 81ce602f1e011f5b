use std::path::PathBuf;

/// Errors produced by the analysis, evaluation and degradation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what} contains a non-finite sample")]
    NonFinite { what: &'static str },

    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),

    #[error("fundamental frequency {f0_hz} Hz outside the supported 50-500 Hz range")]
    PitchOutOfRange { f0_hz: f64 },

    #[error("instant sequence not strictly increasing at index {index}")]
    NotIncreasing { index: usize },

    #[error("input too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("reference must contain at least two glottal cycles")]
    EmptyReference,

    #[error("no voiced reference cycles to evaluate against")]
    NoVoicedCycles,

    #[error("no usable analysis frames")]
    NoUsableFrames,

    #[error("signal has zero energy")]
    ZeroEnergy,

    #[error("alignment unreliable (confidence {confidence:.2}, need {needed:.2}); supply the delay manually")]
    AlignmentUnreliable { confidence: f64, needed: f64 },

    #[error("room configuration infeasible: {0}")]
    InfeasibleRoom(String),

    #[error("unsupported WAV format in {path}: {detail} (expected 16-bit mono PCM)")]
    WavFormat { path: PathBuf, detail: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
