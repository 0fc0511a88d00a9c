//! Vertices, pairwise affinity, gating, and the K-limited affinity graph.
//!
//! The affinity of two temporally disjoint vertices averages three terms:
//! cosine similarity of their mean embeddings, `exp(-gap / sigma_t)` on the
//! frame gap, and `exp(-err / sigma_p)` on the distance between the earlier
//! vertex's constant-velocity prediction and the later vertex's first box
//! center. Overlapping vertices have affinity `-inf`.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;

use crate::error::Result;
use crate::model_io::{BoundingBox, Config, Detection, Gating, NeighborPolicy};

/// Graph node: one tracklet or a merged group of temporally disjoint tracklets.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub vertex_id: usize,
    /// Base tracklet ids, sorted.
    pub member_tracklets: Vec<usize>,
    /// Mean embedding over every member detection.
    pub embedding: Vec<f64>,
    /// Covered frames, sorted ascending.
    pub frames: Vec<u32>,
    /// Box at each covered frame, parallel to `frames`.
    pub boxes: Vec<BoundingBox>,
}

impl Vertex {
    /// Builds a vertex from frame-sorted detections.
    pub fn from_detections(vertex_id: usize, member_tracklets: Vec<usize>, detections: &[Detection]) -> Self {
        assert!(!detections.is_empty(), "vertex needs at least one detection");
        let dim = detections[0].embedding.len();
        let mut embedding = vec![0.0; dim];
        for d in detections {
            for (acc, x) in embedding.iter_mut().zip(&d.embedding) {
                *acc += x;
            }
        }
        let n = detections.len() as f64;
        embedding.iter_mut().for_each(|x| *x /= n);
        Self {
            vertex_id,
            member_tracklets,
            embedding,
            frames: detections.iter().map(|d| d.frame).collect(),
            boxes: detections.iter().map(|d| d.bbox).collect(),
        }
    }

    pub fn start_frame(&self) -> u32 {
        self.frames[0]
    }

    pub fn end_frame(&self) -> u32 {
        *self.frames.last().unwrap()
    }

    pub fn span(&self) -> (u32, u32) {
        (self.start_frame(), self.end_frame())
    }

    pub fn first_box(&self) -> &BoundingBox {
        &self.boxes[0]
    }

    pub fn last_box(&self) -> &BoundingBox {
        self.boxes.last().unwrap()
    }

    pub fn detection_count(&self) -> usize {
        self.frames.len()
    }

    /// Center displacement per frame between the first and last box.
    pub fn velocity(&self) -> [f64; 2] {
        let (s, e) = self.span();
        if e == s {
            return [0.0, 0.0];
        }
        let a = self.first_box().center();
        let b = self.last_box().center();
        let dt = (e - s) as f64;
        [(b[0] - a[0]) / dt, (b[1] - a[1]) / dt]
    }
}

/// Minimum frame gap between two vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeGap {
    Overlap,
    Gap(u32),
}

/// Gap between two inclusive frame spans: `later.start - earlier.end`, or
/// `Overlap` when the spans intersect.
pub fn time_gap(a: (u32, u32), b: (u32, u32)) -> TimeGap {
    if a.1 < b.0 {
        TimeGap::Gap(b.0 - a.1)
    } else if b.1 < a.0 {
        TimeGap::Gap(a.0 - b.1)
    } else {
        TimeGap::Overlap
    }
}

/// Constant-velocity extrapolation of the vertex's box center.
pub fn predict_position(v: &Vertex, target_frame: u32) -> [f64; 2] {
    let c = v.last_box().center();
    let vel = v.velocity();
    let dt = target_frame as f64 - v.end_frame() as f64;
    [c[0] + vel[0] * dt, c[1] + vel[1] * dt]
}

/// Cosine similarity; 0 if either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Averages the appearance, temporal and spatial terms.
pub fn combine_affinity(appearance: f64, gap: TimeGap, position_error: f64, config: &Config) -> f64 {
    match gap {
        TimeGap::Gap(g) if g > 0 => {
            let st = (-(g as f64) / config.sigma_t).exp();
            let sp = (-position_error / config.sigma_p).exp();
            (appearance + st + sp) / 3.0
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Orders a pair so that the earlier-ending vertex comes first.
fn oriented<'a>(a: &'a Vertex, b: &'a Vertex) -> (&'a Vertex, &'a Vertex) {
    if (a.end_frame(), a.vertex_id) <= (b.end_frame(), b.vertex_id) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Distance from the earlier vertex's prediction to the later vertex's first center.
pub fn position_error(a: &Vertex, b: &Vertex) -> f64 {
    let (src, dst) = oriented(a, b);
    distance(predict_position(src, dst.start_frame()), dst.first_box().center())
}

/// Pairwise vertex affinity; `-inf` when the vertices overlap in time.
pub fn edge_affinity(a: &Vertex, b: &Vertex, config: &Config) -> f64 {
    let gap = time_gap(a.span(), b.span());
    if gap == TimeGap::Overlap {
        return f64::NEG_INFINITY;
    }
    combine_affinity(cosine(&a.embedding, &b.embedding), gap, position_error(a, b), config)
}

/// Vertices `j != i` passing all three gates.
pub fn valid_neighbors(i: usize, vertices: &[Vertex], gating: &Gating) -> Vec<usize> {
    let vi = &vertices[i];
    (0..vertices.len())
        .filter(|&j| j != i && passes_gates(vi, &vertices[j], gating))
        .collect()
}

fn passes_gates(a: &Vertex, b: &Vertex, gating: &Gating) -> bool {
    let TimeGap::Gap(g) = time_gap(a.span(), b.span()) else {
        return false;
    };
    g > 0
        && g as f64 <= gating.time
        && position_error(a, b) <= gating.position
        && 1.0 - cosine(&a.embedding, &b.embedding) <= gating.appearance
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub affinity: f64,
}

/// Undirected graph over vertex indices; each edge stored once with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl AffinityGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Writes `i,j,a_ij` per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.edges {
            writeln!(out, "{},{},{}", e.i, e.j, e.affinity)?;
        }
        Ok(())
    }
}

/// Sorts by descending affinity, ties to the smaller index, and keeps `k`.
pub(crate) fn top_k(mut candidates: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    candidates.truncate(k);
    candidates
}

/// Builds the gated graph for a 1-based iteration, keeping each vertex's top-K edges.
pub fn build_affinity_graph(vertices: &[Vertex], config: &Config, iteration: usize) -> AffinityGraph {
    let gating = config.gating(iteration);
    let k = config.max_neighbors;
    let per_vertex: Vec<Vec<(usize, f64)>> = (0..vertices.len())
        .into_par_iter()
        .map(|i| {
            let candidates = valid_neighbors(i, vertices, &gating)
                .into_iter()
                .map(|j| (j, edge_affinity(&vertices[i], &vertices[j], config)))
                .filter(|(_, a)| a.is_finite())
                .collect();
            top_k(candidates, k)
        })
        .collect();

    let mut chosen: BTreeSet<(usize, usize)> = BTreeSet::new();
    match config.neighbor_policy {
        NeighborPolicy::Union => {
            for (i, list) in per_vertex.iter().enumerate() {
                for &(j, _) in list {
                    chosen.insert((i.min(j), i.max(j)));
                }
            }
        }
        NeighborPolicy::Intersection => {
            for (i, list) in per_vertex.iter().enumerate() {
                for &(j, _) in list {
                    if i < j && per_vertex[j].iter().any(|&(x, _)| x == i) {
                        chosen.insert((i, j));
                    }
                }
            }
        }
    }
    let edges = chosen
        .into_iter()
        .map(|(i, j)| Edge { i, j, affinity: edge_affinity(&vertices[i], &vertices[j], config) })
        .collect();
    AffinityGraph { vertices: vertices.to_vec(), edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertex(id: usize, frames: std::ops::RangeInclusive<u32>, x0: f64, vx: f64, emb: Vec<f64>) -> Vertex {
        let dets: Vec<Detection> = frames
            .map(|f| {
                let b = BoundingBox::new(x0 + vx * f as f64, 0.0, 10.0, 10.0).unwrap();
                Detection::new(f, 0, b, 1.0).with_embedding(emb.clone())
            })
            .collect();
        Vertex::from_detections(id, vec![id], &dets)
    }

    #[test]
    fn time_gap_cases() {
        assert_eq!(time_gap((1, 5), (8, 10)), TimeGap::Gap(3));
        assert_eq!(time_gap((8, 10), (1, 5)), TimeGap::Gap(3));
        assert_eq!(time_gap((1, 5), (4, 9)), TimeGap::Overlap);
        assert_eq!(time_gap((1, 5), (6, 7)), TimeGap::Gap(1));
        assert_eq!(time_gap((1, 5), (5, 9)), TimeGap::Overlap);
        assert_eq!(time_gap((1, 10), (3, 4)), TimeGap::Overlap);
    }

    #[test]
    fn prediction() {
        let stat = vertex(0, 1..=4, 20.0, 0.0, vec![1.0]);
        assert_eq!(predict_position(&stat, 100), stat.last_box().center());

        // centers (0,0)@1 -> (10,0)@11
        let mk = |f: u32, cx: f64| {
            Detection::new(f, 0, BoundingBox::new(cx - 5.0, -5.0, 10.0, 10.0).unwrap(), 1.0).with_embedding(vec![1.0])
        };
        let v = Vertex::from_detections(0, vec![0], &[mk(1, 0.0), mk(11, 10.0)]);
        let p = predict_position(&v, 16);
        assert!((p[0] - 15.0).abs() < 1e-12 && p[1].abs() < 1e-12);

        let single = vertex(0, 3..=3, 7.0, 0.0, vec![1.0]);
        assert_eq!(predict_position(&single, 9), single.first_box().center());
    }

    #[test]
    fn affinity_hand_values() {
        let c = Config::default();
        let e = vec![1.0, 0.0];
        // g = 40, f = 0
        let a = vertex(0, 1..=1, 0.0, 0.0, e.clone());
        let b = vertex(1, 41..=41, 0.0, 0.0, e.clone());
        let want = (1.0 + (-1.0f64).exp() + 1.0) / 3.0;
        assert!((edge_affinity(&a, &b, &c) - want).abs() < 1e-12);
        assert!((want - 0.7893).abs() < 1e-4);

        // g = 1, f = 100
        let b2 = vertex(1, 2..=2, 100.0, 0.0, e.clone());
        let want2 = (1.0 + (-0.025f64).exp() + (-1.0f64).exp()) / 3.0;
        assert!((edge_affinity(&a, &b2, &c) - want2).abs() < 1e-12);
        assert!((want2 - 0.78106).abs() < 1e-5);

        let overlapping = vertex(1, 1..=3, 0.0, 0.0, e);
        assert_eq!(edge_affinity(&a, &overlapping, &c), f64::NEG_INFINITY);
    }

    #[test]
    fn affinity_is_symmetric_and_zero_norm_safe() {
        let c = Config::default();
        let a = vertex(0, 1..=5, 0.0, 2.0, vec![0.3, 0.4]);
        let b = vertex(1, 9..=12, 30.0, 1.0, vec![0.0, 0.0]);
        assert_eq!(edge_affinity(&a, &b, &c), edge_affinity(&b, &a, &c));
        let s = edge_affinity(&a, &b, &c);
        let expect = (0.0 + (-4.0f64 / 40.0).exp() + (-position_error(&a, &b) / 100.0).exp()) / 3.0;
        assert!((s - expect).abs() < 1e-12);
    }

    #[test]
    fn gates() {
        let vs = vec![
            vertex(0, 1..=5, 0.0, 0.0, vec![1.0, 0.0]),
            vertex(1, 8..=9, 0.0, 0.0, vec![1.0, 0.0]),
            vertex(2, 3..=6, 0.0, 0.0, vec![1.0, 0.0]),
        ];
        assert_eq!(valid_neighbors(0, &vs, &Gating::OPEN), vec![1]);
        let closed = Gating { time: 0.0, ..Gating::OPEN };
        assert!(valid_neighbors(0, &vs, &closed).is_empty());
    }

    #[test]
    fn k_limit_per_policy() {
        let mut c = Config { gate_relaxation: vec![1e6], max_neighbors: 3, ..Config::default() };
        let mut vs = vec![vertex(0, 1..=1, 0.0, 0.0, vec![1.0, 0.0])];
        for j in 1..=5u32 {
            vs.push(vertex(j as usize, (1 + j * 2)..=(1 + j * 2), 0.0, 0.0, vec![1.0, 0.0]));
        }
        // stretch vertices 1..=5 to frame 40 so they overlap each other and
        // only vertex 0 can link to them, with affinity falling as the gap grows
        for (j, v) in vs.iter_mut().enumerate().skip(1) {
            v.frames = vec![1 + j as u32 * 2, 40];
            v.boxes = vec![*v.first_box(), *v.first_box()];
        }
        let from0 = |c: &Config| -> Vec<usize> {
            build_affinity_graph(&vs, c, 1).edges.iter().filter(|e| e.i == 0).map(|e| e.j).collect()
        };
        // every other vertex has vertex 0 as its only candidate
        assert_eq!(from0(&c), vec![1, 2, 3, 4, 5]);
        c.neighbor_policy = NeighborPolicy::Intersection;
        assert_eq!(from0(&c), vec![1, 2, 3]);
    }
}
