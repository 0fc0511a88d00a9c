//! Proposal scoring: a GCN purity estimate plus a length term.

pub mod adam;
pub mod features;
pub mod gcn;
pub mod labels;
pub mod train;

use std::sync::atomic::{AtomicUsize, Ordering};

pub use adam::{adam_step, adam_update, AdamParams, AdamState};
pub use features::{
    encode_spatiotemporal, feature_matrix, proposal_affinity_matrix, GcnInput, SpatioTemporalFeature, ST_DIM,
};
pub use gcn::{gcn_forward, gcn_gradients, normalized_adjacency, GcnGradients, GcnModel, Loss};
pub use labels::{
    label_detections, label_proposal, oracle_score, quality_score, DetectionLabels, ProposalLabel,
};
pub use train::{
    accuracy, augment_sample, make_sample, read_samples, train_gcn, write_samples, TrainingReport, TrainingSample,
};

use crate::error::Result;
use crate::model_io::{Config, Detection, GroundTruthEntry};
use crate::preprocess::Tracklet;

/// Assigns a quality score to a proposal given by its member tracklets.
pub trait ProposalScorer: Sync {
    fn score(&self, members: &[&Tracklet]) -> Result<f64>;
}

fn size_of(members: &[&Tracklet]) -> usize {
    members.iter().map(|t| t.len()).sum()
}

/// Scores with the ground-truth purity.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    pub labels: DetectionLabels,
    pub config: Config,
}

impl OracleScorer {
    pub fn new(detections: &[Detection], ground_truth: &[GroundTruthEntry], config: &Config) -> Self {
        Self { labels: label_detections(detections, ground_truth), config: config.clone() }
    }
}

impl ProposalScorer for OracleScorer {
    fn score(&self, members: &[&Tracklet]) -> Result<f64> {
        Ok(oracle_score(members, &self.labels, &self.config))
    }
}

/// Scores with a trained purity network.
#[derive(Debug, Clone)]
pub struct GcnScorer {
    pub model: GcnModel,
    pub config: Config,
}

impl GcnScorer {
    pub fn new(model: GcnModel, config: &Config) -> Self {
        Self { model, config: config.clone() }
    }

    pub fn purity(&self, members: &[&Tracklet]) -> Result<f64> {
        let p = self.model.forward(&GcnInput::from_members(members, &self.config))?;
        Ok(if self.config.binarize_purity { (p >= 0.5) as u8 as f64 } else { p })
    }
}

impl ProposalScorer for GcnScorer {
    fn score(&self, members: &[&Tracklet]) -> Result<f64> {
        Ok(quality_score(size_of(members), self.purity(members)?, &self.config))
    }
}

/// Any closure works as a scorer.
impl<F> ProposalScorer for F
where
    F: Fn(&[&Tracklet]) -> Result<f64> + Sync,
{
    fn score(&self, members: &[&Tracklet]) -> Result<f64> {
        self(members)
    }
}

/// Wraps a scorer and counts its invocations.
#[derive(Debug, Default)]
pub struct CountingScorer<S> {
    pub inner: S,
    calls: AtomicUsize,
}

impl<S> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<S: ProposalScorer> ProposalScorer for CountingScorer<S> {
    fn score(&self, members: &[&Tracklet]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.score(members)
    }
}
