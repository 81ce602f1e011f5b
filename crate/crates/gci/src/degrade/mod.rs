//! Reproducible signal degradations: additive noise at a controlled
//! segmental SNR and single-channel reverberation from simulated room
//! impulse responses.

pub mod noise;
pub mod room;

pub use noise::{add_noise, segmental_snr_db, NoiseKind, NoiseSpec, DEFAULT_FRAME_MS};
pub use room::{convolve_rir, simulate_rir, AbsorptionModel, RoomSpec, SPEED_OF_SOUND_M_S};
