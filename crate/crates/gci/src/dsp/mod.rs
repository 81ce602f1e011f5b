//! Shared signal-processing primitives: linear prediction, the Hilbert
//! envelope, zero crossings, and local extrema.

pub(crate) mod fft;
pub mod hilbert;
pub mod lpc;
pub mod peaks;
pub mod resample;
pub mod zerocross;

pub use hilbert::hilbert_envelope;
pub use lpc::{lp_residual, lpc_analyze, voice_source, LpcConfig, LpcModel};
pub use resample::resample;
pub use zerocross::{zero_crossings, CrossingDirection};
