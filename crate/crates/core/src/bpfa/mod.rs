//! Patch-based inpainting by beta-process factor analysis.

mod model;
mod patches;

pub use model::{
    batch_rss, e_step, infer, infer_with_dictionary, init_state, m_step, masked_rss, overlap_average,
    reconstruct_slice, run_epochs, BpfaConfig, BpfaState, Dictionary, EpochStats, EPS_BETA, EPS_PI, GAMMA_N_MAX,
    GAMMA_N_MIN, RSS_FLOOR,
};
pub use patches::{extract_patches, ObservedPatch, PatchSet};
