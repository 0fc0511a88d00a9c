//! Frame-to-frame linking of detections into short, high-purity tracklets.
//!
//! Links are solved per frame pair by linear assignment on affinity. A link
//! is kept only if its affinity reaches `link_threshold` and beats every
//! rival in its row and column of the affinity matrix by `link_margin`.
//! Tracklets end as soon as a frame link fails; bridging gaps is left to
//! proposal generation.

use crate::affinity::{combine_affinity, cosine, TimeGap, Vertex};
use crate::assignment::{solve_assignment, CostMatrix};
use crate::model_io::{BoundingBox, Config, Detection};

#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub tracklet_id: usize,
    /// Consecutive-frame detections, frame-ordered.
    pub detections: Vec<Detection>,
    /// Arithmetic mean of member embeddings.
    pub mean_embedding: Vec<f64>,
}

impl Tracklet {
    pub fn new(tracklet_id: usize, detections: Vec<Detection>) -> Self {
        assert!(!detections.is_empty(), "tracklet needs at least one detection");
        let dim = detections[0].embedding.len();
        let mut mean_embedding = vec![0.0; dim];
        for d in &detections {
            for (m, x) in mean_embedding.iter_mut().zip(&d.embedding) {
                *m += x;
            }
        }
        let n = detections.len() as f64;
        mean_embedding.iter_mut().for_each(|m| *m /= n);
        Self { tracklet_id, detections, mean_embedding }
    }

    pub fn start_frame(&self) -> u32 {
        self.detections[0].frame
    }

    pub fn end_frame(&self) -> u32 {
        self.detections.last().unwrap().frame
    }

    pub fn first_box(&self) -> &BoundingBox {
        &self.detections[0].bbox
    }

    pub fn last_box(&self) -> &BoundingBox {
        &self.detections.last().unwrap().bbox
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn to_vertex(&self, vertex_id: usize) -> Vertex {
        Vertex::from_detections(vertex_id, vec![self.tracklet_id], &self.detections)
    }
}

/// Affinity of two single detections: each is treated as a one-frame vertex
/// with zero velocity. Same-frame pairs get `-inf`.
pub fn detection_affinity(a: &Detection, b: &Detection, config: &Config) -> f64 {
    let gap = if a.frame == b.frame { TimeGap::Overlap } else { TimeGap::Gap(a.frame.abs_diff(b.frame)) };
    let ca = a.bbox.center();
    let cb = b.bbox.center();
    let dist = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt();
    combine_affinity(cosine(&a.embedding, &b.embedding), gap, dist, config)
}

struct Growing {
    detections: Vec<Detection>,
    embedding_sum: Vec<f64>,
}

impl Growing {
    fn start(d: Detection) -> Self {
        Self { embedding_sum: d.embedding.clone(), detections: vec![d] }
    }

    fn push(&mut self, d: Detection) {
        for (s, x) in self.embedding_sum.iter_mut().zip(&d.embedding) {
            *s += x;
        }
        self.detections.push(d);
    }

    /// The tracklet seen as a detection: mean embedding at its last box.
    fn as_probe(&self) -> Detection {
        let last = self.detections.last().unwrap();
        let n = self.detections.len() as f64;
        let mut probe = last.clone();
        probe.embedding = self.embedding_sum.iter().map(|s| s / n).collect();
        probe
    }
}

/// Links detections frame by frame; every detection lands in exactly one tracklet.
pub fn build_tracklets(detections: &[Detection], config: &Config) -> Vec<Tracklet> {
    let mut sorted: Vec<&Detection> = detections.iter().collect();
    sorted.sort_by_key(|d| d.key());

    let mut growing: Vec<Growing> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut prev_frame: Option<u32> = None;

    for frame_dets in sorted.chunk_by(|a, b| a.frame == b.frame) {
        let frame = frame_dets[0].frame;
        if prev_frame.map(|p| p + 1) != Some(frame) {
            active.clear();
        }
        let probes: Vec<Detection> = active.iter().map(|&t| growing[t].as_probe()).collect();
        let rows = probes.len();
        let cols = frame_dets.len();
        let aff: Vec<f64> = probes
            .iter()
            .flat_map(|p| frame_dets.iter().map(move |d| detection_affinity(p, d, config)))
            .collect();
        let costs = CostMatrix::new(rows, cols, aff.iter().map(|a| -a).collect())
            .expect("affinities of consecutive frames are finite");

        let mut linked_to: Vec<Option<usize>> = vec![None; cols];
        for (r, c) in solve_assignment(&costs) {
            let a = aff[r * cols + c];
            let row_rival = (0..cols).filter(|&k| k != c).map(|k| aff[r * cols + k]);
            let col_rival = (0..rows).filter(|&k| k != r).map(|k| aff[k * cols + c]);
            let rival = row_rival.chain(col_rival).fold(f64::NEG_INFINITY, f64::max);
            if a >= config.link_threshold && a - rival >= config.link_margin {
                linked_to[c] = Some(active[r]);
            }
        }

        let mut next_active = Vec::with_capacity(cols);
        for (c, d) in frame_dets.iter().enumerate() {
            match linked_to[c] {
                Some(t) => {
                    growing[t].push((*d).clone());
                    next_active.push(t);
                }
                None => {
                    growing.push(Growing::start((*d).clone()));
                    next_active.push(growing.len() - 1);
                }
            }
        }
        next_active.sort_unstable();
        active = next_active;
        prev_frame = Some(frame);
    }

    growing
        .into_iter()
        .enumerate()
        .map(|(id, g)| Tracklet::new(id, g.detections))
        .collect()
}
