//! Iterative proposal generation.
//!
//! Each iteration builds an affinity graph over the current vertices and
//! clusters it by thresholded connected components: edges below a threshold
//! are pruned, small temporally compatible components are accepted, and the
//! rest are re-split at a threshold raised by `threshold_step` until nothing
//! remains. Accepted clusters become the vertices of the next iteration, and
//! every cluster of every iteration is kept as a proposal.

use std::collections::BTreeMap;
use std::io::Write;

use crate::affinity::{build_affinity_graph, time_gap, AffinityGraph, TimeGap, Vertex};
use crate::error::Result;
use crate::model_io::{BoundingBox, Config};
use crate::preprocess::Tracklet;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Connected components of `nodes` under `edges`. Components are sorted
/// internally and ordered by their smallest member.
pub fn connected_components(nodes: &[usize], edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let index: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let mut uf = UnionFind::new(nodes.len());
    for (a, b) in edges {
        if let (Some(&ka), Some(&kb)) = (index.get(&a), index.get(&b)) {
            uf.union(ka, kb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &n) in nodes.iter().enumerate() {
        groups.entry(uf.find(k)).or_default().push(n);
    }
    let mut comps: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

/// Size rule for accepting a component as a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterSizeLimit {
    pub max: usize,
    /// Accept only `size < max` rather than `size <= max`.
    pub strict: bool,
}

impl ClusterSizeLimit {
    pub fn from_config(config: &Config) -> Self {
        Self { max: config.max_cluster_size, strict: config.strict_cluster_size }
    }

    pub fn admits(&self, size: usize) -> bool {
        size == 1 || if self.strict { size < self.max } else { size <= self.max }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Vertex indices of the iteration's graph, sorted.
    pub members: Vec<usize>,
    pub iteration: usize,
}

/// True iff no two member vertices overlap in time.
pub fn compatible(members: &[usize], vertices: &[Vertex]) -> bool {
    members.iter().enumerate().all(|(k, &a)| {
        members[k + 1..]
            .iter()
            .all(|&b| matches!(time_gap(vertices[a].span(), vertices[b].span()), TimeGap::Gap(g) if g >= 1))
    })
}

/// One thresholding round on the subgraph induced by `subset`: drops edges
/// below `tau`, then splits components into accepted clusters and remainder.
pub fn find_clusters(
    graph: &AffinityGraph,
    subset: &[usize],
    tau: f64,
    limit: ClusterSizeLimit,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let kept = graph.edges.iter().filter(|e| e.affinity >= tau).map(|e| (e.i, e.j));
    connected_components(subset, kept)
        .into_iter()
        .partition(|c| limit.admits(c.len()) && compatible(c, &graph.vertices))
}

/// Clusters every vertex of `graph`, raising the edge threshold by `step`
/// from the weakest edge until all components are accepted.
pub fn cluster_nodes(graph: &AffinityGraph, limit: ClusterSizeLimit, step: f64, iteration: usize) -> Vec<Cluster> {
    cluster_nodes_counted(graph, limit, step, iteration).0
}

/// [`cluster_nodes`] plus the number of thresholding rounds it took.
pub fn cluster_nodes_counted(
    graph: &AffinityGraph,
    limit: ClusterSizeLimit,
    step: f64,
    iteration: usize,
) -> (Vec<Cluster>, usize) {
    assert!(step > 0.0, "threshold step must be positive");
    let all: Vec<usize> = (0..graph.num_vertices()).collect();
    let min = graph.edges.iter().map(|e| e.affinity).fold(f64::INFINITY, f64::min);
    let max = graph.edges.iter().map(|e| e.affinity).fold(f64::NEG_INFINITY, f64::max);
    let mut tau = if min.is_finite() { min } else { 0.0 };

    let (mut accepted, mut remainder) = find_clusters(graph, &all, tau, limit);
    let mut rounds = 1;
    while !remainder.is_empty() {
        tau += step;
        rounds += 1;
        let subset: Vec<usize> = remainder.concat();
        let (more, rest) = find_clusters(graph, &subset, tau, limit);
        accepted.extend(more);
        remainder = rest;
        // all edges pruned: only singletons can remain, and they are always admitted
        debug_assert!(tau <= max + step || remainder.is_empty());
    }
    accepted.sort_unstable_by_key(|c| c[0]);
    let clusters = accepted.into_iter().map(|members| Cluster { members, iteration }).collect();
    (clusters, rounds)
}

/// Merges each cluster into one vertex of the next iteration. Vertex ids are
/// the cluster positions.
pub fn update_nodes(clusters: &[Cluster], vertices: &[Vertex]) -> Vec<Vertex> {
    clusters
        .iter()
        .enumerate()
        .map(|(id, cluster)| {
            if let [only] = cluster.members[..] {
                return Vertex { vertex_id: id, ..vertices[only].clone() };
            }
            let members: Vec<&Vertex> = cluster.members.iter().map(|&m| &vertices[m]).collect();
            let dim = members[0].embedding.len();
            let mut embedding = vec![0.0; dim];
            let mut total = 0usize;
            let mut timeline: Vec<(u32, BoundingBox)> = Vec::new();
            let mut tracklets = Vec::new();
            for v in &members {
                let n = v.detection_count();
                for (acc, x) in embedding.iter_mut().zip(&v.embedding) {
                    *acc += x * n as f64;
                }
                total += n;
                timeline.extend(v.frames.iter().copied().zip(v.boxes.iter().copied()));
                tracklets.extend_from_slice(&v.member_tracklets);
            }
            embedding.iter_mut().for_each(|x| *x /= total as f64);
            timeline.sort_by_key(|(f, _)| *f);
            tracklets.sort_unstable();
            Vertex {
                vertex_id: id,
                member_tracklets: tracklets,
                embedding,
                frames: timeline.iter().map(|(f, _)| *f).collect(),
                boxes: timeline.iter().map(|(_, b)| *b).collect(),
            }
        })
        .collect()
}

/// Candidate trajectory: a temporally compatible set of base tracklets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub proposal_id: usize,
    /// Sorted tracklet ids.
    pub base_tracklets: Vec<usize>,
    /// First iteration (1-based) that produced this tracklet set.
    pub created_iteration: usize,
    /// Total detections across the member tracklets.
    pub size_in_detections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationStats {
    pub iteration: usize,
    pub vertices: usize,
    pub edges: usize,
    pub clusters: usize,
    pub merged_clusters: usize,
    pub new_proposals: usize,
}

/// Deduplicated proposals ordered by tracklet set; `proposal_id` is the position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProposalSet {
    pub proposals: Vec<Proposal>,
    pub iterations: Vec<IterationStats>,
}

impl ProposalSet {
    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    /// Writes `proposal_id: tracklet ids...` per proposal.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.proposals {
            write!(out, "{}:", p.proposal_id)?;
            for t in &p.base_tracklets {
                write!(out, " {t}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs proposal generation, reporting each iteration's graph and clusters to `observe`.
pub fn generate_proposals_with(
    tracklets: &[Tracklet],
    config: &Config,
    mut observe: impl FnMut(usize, &AffinityGraph, &[Cluster]),
) -> ProposalSet {
    let limit = ClusterSizeLimit::from_config(config);
    let mut vertices: Vec<Vertex> = tracklets.iter().enumerate().map(|(i, t)| t.to_vertex(i)).collect();
    let mut found: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    let mut iterations = Vec::new();

    for iteration in 1..=config.max_iterations {
        if vertices.is_empty() {
            break;
        }
        let graph = build_affinity_graph(&vertices, config, iteration);
        let clusters = cluster_nodes(&graph, limit, config.threshold_step, iteration);
        observe(iteration, &graph, &clusters);
        let next = update_nodes(&clusters, &vertices);
        let mut new_proposals = 0;
        // the base tracklets themselves are the first iteration's proposals too
        let inputs = if iteration == 1 { &vertices[..] } else { &[] };
        for v in inputs.iter().chain(&next) {
            found.entry(v.member_tracklets.clone()).or_insert_with(|| {
                new_proposals += 1;
                (iteration, v.detection_count())
            });
        }
        let merged = clusters.iter().filter(|c| c.members.len() > 1).count();
        iterations.push(IterationStats {
            iteration,
            vertices: vertices.len(),
            edges: graph.edges.len(),
            clusters: clusters.len(),
            merged_clusters: merged,
            new_proposals,
        });
        vertices = next;
        // nothing merged under the final gates: every later round is identical
        if merged == 0 && config.gating_settled(iteration) {
            break;
        }
    }

    let proposals = found
        .into_iter()
        .enumerate()
        .map(|(proposal_id, (base_tracklets, (created_iteration, size_in_detections)))| Proposal {
            proposal_id,
            base_tracklets,
            created_iteration,
            size_in_detections,
        })
        .collect();
    ProposalSet { proposals, iterations }
}

pub fn generate_proposals(tracklets: &[Tracklet], config: &Config) -> ProposalSet {
    generate_proposals_with(tracklets, config, |_, _, _| {})
}
