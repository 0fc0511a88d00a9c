//! Run configuration, read from a flat `key = value` TOML document.
//!
//! Every key is optional; omitted keys keep the defaults below. Unknown keys
//! are rejected so that a misspelled parameter cannot silently fall back to
//! its default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::Loss;

/// Which endpoint's top-K list an edge must appear in to survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborPolicy {
    /// Keep an edge if it is in the top-K of either endpoint.
    Union,
    /// Keep an edge only if it is in the top-K of both endpoints.
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Temporal affinity scale, frames.
    pub sigma_t: f64,
    /// Spatial affinity scale, pixels.
    pub sigma_p: f64,
    /// Number of proposal-generation rounds.
    pub max_iterations: usize,
    /// Edges kept per vertex when building the affinity graph.
    pub max_neighbors: usize,
    /// Largest cluster (in vertices) accepted by one clustering round.
    pub max_cluster_size: usize,
    /// Edge-threshold increment between clustering rounds.
    pub threshold_step: f64,
    /// Accept clusters with `size < max_cluster_size` instead of `<=`.
    pub strict_cluster_size: bool,
    /// Weight of the purity term in the quality score.
    pub quality_weight: f64,
    /// Track-length normalizer of the recall term, detections.
    pub length_normalizer: f64,
    /// Base gate on the time gap between vertices, frames.
    pub gate_time: f64,
    /// Base gate on predicted-position error, pixels.
    pub gate_position: f64,
    /// Base gate on cosine distance.
    pub gate_appearance: f64,
    /// Per-iteration multipliers on the gates; the last entry repeats.
    pub gate_relaxation: Vec<f64>,
    pub neighbor_policy: NeighborPolicy,
    /// Minimum affinity for a frame-to-frame link.
    pub link_threshold: f64,
    /// Required lead of a link over its best row/column rival.
    pub link_margin: f64,
    pub gcn_layers: usize,
    pub gcn_hidden: Vec<usize>,
    pub embedding_dim: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Training objective.
    pub loss: Loss,
    /// Passes over the shuffled training set.
    pub training_iterations: usize,
    /// Per-detection removal probability used by training augmentation.
    pub drop_probability: f64,
    /// Augmented copies drawn per labeled proposal.
    pub augment_copies: usize,
    /// Extra random groups of time-compatible tracklets labeled per training
    /// sequence, on top of the generated proposals.
    pub random_groups: usize,
    /// Threshold GCN purity at 0.5 before computing the quality score.
    pub binarize_purity: bool,
    /// Drop output tracks shorter than this many detections (0 keeps all).
    pub min_track_length: usize,
    /// Fill frames missing inside a track by linear interpolation.
    pub interpolate: bool,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            sigma_t: 40.0,
            sigma_p: 100.0,
            max_iterations: 10,
            max_neighbors: 3,
            max_cluster_size: 2,
            threshold_step: 0.05,
            strict_cluster_size: false,
            quality_weight: 1.0,
            length_normalizer: 200.0,
            gate_time: 60.0,
            gate_position: 300.0,
            gate_appearance: 0.5,
            gate_relaxation: vec![0.25, 0.5, 0.75, 1.0],
            neighbor_policy: NeighborPolicy::Union,
            link_threshold: 0.7,
            link_margin: 0.05,
            gcn_layers: 4,
            gcn_hidden: vec![64, 64, 64, 64],
            embedding_dim: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            weight_decay: 1e-4,
            batch_size: 2048,
            loss: Loss::Bce,
            training_iterations: 100,
            drop_probability: 0.1,
            augment_copies: 1,
            random_groups: 0,
            binarize_purity: false,
            min_track_length: 0,
            interpolate: true,
            seed: 0,
        }
    }
}

/// Gate radii in force during one proposal-generation iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gating {
    pub time: f64,
    pub position: f64,
    pub appearance: f64,
}

impl Gating {
    pub const OPEN: Gating = Gating {
        time: f64::INFINITY,
        position: f64::INFINITY,
        appearance: f64::INFINITY,
    };
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.max_iterations < 1 {
            return fail("max_iterations must be >= 1");
        }
        if self.max_neighbors < 1 {
            return fail("max_neighbors must be >= 1");
        }
        if self.max_cluster_size < 1 {
            return fail("max_cluster_size must be >= 1");
        }
        if !(self.threshold_step > 0.0 && self.threshold_step.is_finite()) {
            return fail("threshold_step must be > 0");
        }
        if !(self.length_normalizer > 0.0) {
            return fail("length_normalizer must be > 0");
        }
        if !(self.sigma_t > 0.0) || !(self.sigma_p > 0.0) {
            return fail("sigma_t and sigma_p must be > 0");
        }
        if self.gate_time < 0.0 || self.gate_position < 0.0 || self.gate_appearance < 0.0 {
            return fail("gates must be non-negative");
        }
        if self.gate_relaxation.is_empty() || self.gate_relaxation.iter().any(|m| !(*m >= 0.0)) {
            return fail("gate_relaxation must be a non-empty list of non-negative multipliers");
        }
        if self.gcn_layers < 1 {
            return fail("gcn_layers must be >= 1");
        }
        if self.gcn_hidden.len() != self.gcn_layers {
            return fail("gcn_hidden must list exactly gcn_layers widths");
        }
        if self.gcn_hidden.contains(&0) {
            return fail("gcn_hidden widths must be positive");
        }
        if self.embedding_dim < 1 {
            return fail("embedding_dim must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) || self.weight_decay < 0.0 {
            return fail("adam_epsilon must be > 0 and weight_decay >= 0");
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return fail("drop_probability must lie in [0, 1)");
        }
        Ok(())
    }

    /// Gates for a 1-based iteration: base radii times the relaxation multiplier.
    pub fn gating(&self, iteration: usize) -> Gating {
        let idx = iteration.saturating_sub(1).min(self.gate_relaxation.len() - 1);
        let m = self.gate_relaxation[idx];
        Gating {
            time: self.gate_time * m,
            position: self.gate_position * m,
            appearance: self.gate_appearance * m,
        }
    }

    /// True once `iteration` uses the final relaxation multiplier.
    pub fn gating_settled(&self, iteration: usize) -> bool {
        iteration >= self.gate_relaxation.len()
    }

    /// Serializes to the same flat document [`parse_config`] reads.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

/// Parses a configuration document; absent keys take their defaults.
pub fn parse_config(text: &str) -> Result<Config> {
    let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
