//! Offline multi-object tracking by proposal generation, proposal scoring,
//! and trajectory inference.
//!
//! Detections with appearance embeddings are linked into short tracklets
//! ([`preprocess`]), grown into an over-complete set of candidate
//! trajectories by iterative graph clustering ([`affinity`], [`proposals`]),
//! scored by a graph-convolutional purity classifier plus a length term
//! ([`scoring`]), and resolved into disjoint tracks ([`inference`]).
//! [`metrics`] evaluates results with CLEAR-MOT and IDF1, and [`synth`]
//! generates labeled scenarios for testing and training.

pub mod affinity;
pub mod assignment;
pub mod cli;
pub mod error;
pub mod inference;
pub mod metrics;
pub mod model_io;
pub mod preprocess;
pub mod proposals;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
