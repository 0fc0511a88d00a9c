//! Per-proposal GCN input: vertex features and the dense affinity matrix.
//!
//! Vertices are the proposal's tracklets sorted by start frame. Each vertex
//! feature is its mean embedding followed by a 5-vector describing the hop
//! from the previous vertex: relative x and y offset (normalized by mean
//! width/height), log height ratio, log width ratio, and frame gap. The first
//! vertex carries `(1, 0, 0, 0, 0)`.

use nalgebra::DMatrix;

use crate::affinity::edge_affinity;
use crate::model_io::{BoundingBox, Config};
use crate::preprocess::Tracklet;

pub type SpatioTemporalFeature = [f64; 5];

/// Width of the spatio-temporal part of a vertex feature.
pub const ST_DIM: usize = 5;

pub const FIRST_VERTEX_FEATURE: SpatioTemporalFeature = [1.0, 0.0, 0.0, 0.0, 0.0];

/// Sorts proposal members by `(start_frame, tracklet_id)`.
pub fn sort_members<'a>(members: &[&'a Tracklet]) -> Vec<&'a Tracklet> {
    let mut sorted = members.to_vec();
    sorted.sort_by_key(|t| (t.start_frame(), t.tracklet_id));
    sorted
}

/// Hop feature from a box at `end_frame` to a box at `start_frame`.
pub fn hop_feature(from: &BoundingBox, end_frame: u32, to: &BoundingBox, start_frame: u32) -> SpatioTemporalFeature {
    [
        2.0 * (to.x - from.x) / (from.w + to.w),
        2.0 * (to.y - from.y) / (from.h + to.h),
        (to.h / from.h).ln(),
        (to.w / from.w).ln(),
        start_frame as f64 - end_frame as f64,
    ]
}

/// One feature per member in start-frame order.
pub fn encode_spatiotemporal(members: &[&Tracklet]) -> Vec<SpatioTemporalFeature> {
    let sorted = sort_members(members);
    let mut out = Vec::with_capacity(sorted.len());
    for (k, t) in sorted.iter().enumerate() {
        if k == 0 {
            out.push(FIRST_VERTEX_FEATURE);
        } else {
            let prev = sorted[k - 1];
            out.push(hop_feature(prev.last_box(), prev.end_frame(), t.first_box(), t.start_frame()));
        }
    }
    out
}

/// `N x (D + 5)` matrix of `concat(mean embedding, spatio-temporal feature)`.
pub fn feature_matrix(members: &[&Tracklet]) -> DMatrix<f64> {
    let sorted = sort_members(members);
    let st = encode_spatiotemporal(&sorted);
    let dim = sorted.first().map_or(0, |t| t.mean_embedding.len());
    DMatrix::from_fn(sorted.len(), dim + ST_DIM, |r, c| {
        if c < dim {
            sorted[r].mean_embedding[c]
        } else {
            st[r][c - dim]
        }
    })
}

/// Symmetric pairwise affinity between members, clamped to `[0, 1]`, zero diagonal.
pub fn proposal_affinity_matrix(members: &[&Tracklet], config: &Config) -> DMatrix<f64> {
    let sorted = sort_members(members);
    let vertices: Vec<_> = sorted.iter().enumerate().map(|(k, t)| t.to_vertex(k)).collect();
    let n = vertices.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = edge_affinity(&vertices[i], &vertices[j], config).clamp(0.0, 1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Feature matrix and affinity matrix of one proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnInput {
    pub features: DMatrix<f64>,
    pub affinity: DMatrix<f64>,
}

impl GcnInput {
    pub fn from_members(members: &[&Tracklet], config: &Config) -> Self {
        Self { features: feature_matrix(members), affinity: proposal_affinity_matrix(members, config) }
    }

    pub fn num_vertices(&self) -> usize {
        self.features.nrows()
    }
}
