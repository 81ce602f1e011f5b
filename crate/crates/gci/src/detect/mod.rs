//! GCI detectors.
//!
//! Five methods share the same contract: given a positive-polarity speech
//! waveform and a rough pitch prior, return the estimated glottal closure
//! instants in samples. See the individual modules for how each method
//! works and where its tuning knobs live.

pub mod costs;
pub mod dypsa;
pub mod he;
pub mod sedreams;
pub mod yaga;
pub mod zfr;

pub use costs::{
    dp_select, pitch_cost, similarity_cost, subset_cost, Candidate, CandidateOrigin, CandidateSet,
    CostVector, CostWeights, DpConfig, ExtraCosts,
};
pub use dypsa::{detect_dypsa, DypsaConfig};
pub use he::{detect_he, detect_he_fast, HeConfig};
pub use sedreams::{detect_sedreams, detect_sedreams_fast, SedreamsConfig};
pub use yaga::{detect_yaga, swt_details, swt_multiscale_product, MultiscaleProduct, YagaConfig};
pub use zfr::{detect_zfr, ZfrConfig};
