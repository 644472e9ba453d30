//! Compressive slice-and-view simulation.
//!
//! A ground-truth volume is sampled layer by layer with a subsampling mask,
//! each layer is inpainted with beta-process factor analysis over overlapping
//! patches, and the reconstruction of one layer drives the targeted sampling
//! distribution of the next.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bpfa;
pub mod domain;
pub mod error;
pub mod io;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod sampling;

pub use domain::{
    apply_mask, grid_position, linear_index, MeasurementSlice, RngSeed, SamplingMask, Slice, Strategy, Stream, Volume,
};
pub use error::{Error, Result};
pub use par::Execution;
