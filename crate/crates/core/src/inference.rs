//! Turning scored proposals into disjoint trajectories.
//!
//! [`deoverlap`] walks the proposals once in rank order and hands each one
//! the tracklets nobody has claimed yet. [`greedy_inference`] is the slower
//! baseline that rescores the trimmed proposals after every pick.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model_io::{Detection, Trajectory};
use crate::preprocess::Tracklet;
use crate::proposals::ProposalSet;
use crate::scoring::ProposalScorer;

/// Tracklet id to output track id.
pub type TrackAssignment = BTreeMap<usize, u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredProposal {
    pub proposal_id: usize,
    pub base_tracklets: Vec<usize>,
    pub size_in_detections: usize,
    pub score: f64,
}

/// Proposals by descending score, then larger size, then smaller id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedProposals {
    pub entries: Vec<ScoredProposal>,
}

fn rank_order(a: &ScoredProposal, b: &ScoredProposal) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.size_in_detections.cmp(&a.size_in_detections))
        .then(a.proposal_id.cmp(&b.proposal_id))
}

impl RankedProposals {
    pub fn new(mut entries: Vec<ScoredProposal>) -> Self {
        entries.sort_by(rank_order);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Member tracklets of a proposal. `tracklets[k]` must have id `k`.
pub fn members<'a>(ids: &[usize], tracklets: &'a [Tracklet]) -> Vec<&'a Tracklet> {
    ids.iter()
        .map(|&id| {
            let t = &tracklets[id];
            debug_assert_eq!(t.tracklet_id, id);
            t
        })
        .collect()
}

/// Scores every proposal once and ranks them.
pub fn rank_proposals<S: ProposalScorer + ?Sized>(
    proposals: &ProposalSet,
    tracklets: &[Tracklet],
    scorer: &S,
) -> Result<RankedProposals> {
    let entries = proposals
        .proposals
        .par_iter()
        .map(|p| {
            let score = scorer.score(&members(&p.base_tracklets, tracklets))?;
            Ok(ScoredProposal {
                proposal_id: p.proposal_id,
                base_tracklets: p.base_tracklets.clone(),
                size_in_detections: p.size_in_detections,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedProposals::new(entries))
}

/// Single pass in rank order; each proposal keeps only unclaimed tracklets.
/// Track ids start at 1 and proposals left empty consume none.
pub fn deoverlap(ranked: &RankedProposals) -> TrackAssignment {
    let mut out = TrackAssignment::new();
    let mut next = 1;
    for p in &ranked.entries {
        let fresh: Vec<usize> = p.base_tracklets.iter().copied().filter(|t| !out.contains_key(t)).collect();
        if fresh.is_empty() {
            continue;
        }
        for t in fresh {
            out.insert(t, next);
        }
        next += 1;
    }
    out
}

/// Repeatedly rescores the remaining proposals, commits the best one, and
/// removes its tracklets from the rest.
pub fn greedy_inference<S: ProposalScorer + ?Sized>(
    proposals: &ProposalSet,
    tracklets: &[Tracklet],
    scorer: &S,
) -> Result<TrackAssignment> {
    let mut remaining: Vec<(usize, Vec<usize>)> =
        proposals.proposals.iter().map(|p| (p.proposal_id, p.base_tracklets.clone())).collect();
    let mut out = TrackAssignment::new();
    let mut next = 1;
    while !remaining.is_empty() {
        let scored = remaining
            .par_iter()
            .map(|(id, ids)| {
                let m = members(ids, tracklets);
                let size = m.iter().map(|t| t.len()).sum();
                Ok(ScoredProposal { proposal_id: *id, base_tracklets: ids.clone(), size_in_detections: size, score: scorer.score(&m)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let best = scored.into_iter().min_by(rank_order).expect("non-empty");
        let taken: BTreeSet<usize> = best.base_tracklets.iter().copied().collect();
        for &t in &taken {
            out.insert(t, next);
        }
        next += 1;
        remaining.retain_mut(|(id, ids)| {
            if *id == best.proposal_id {
                return false;
            }
            ids.retain(|t| !taken.contains(t));
            !ids.is_empty()
        });
    }
    Ok(out)
}

/// Groups tracklets by track id into frame-ordered trajectories.
pub fn assemble_trajectories(assignment: &TrackAssignment, tracklets: &[Tracklet]) -> Result<Vec<Trajectory>> {
    let mut groups: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    for (&tid, &track) in assignment {
        let t = tracklets
            .get(tid)
            .ok_or_else(|| Error::Integrity(format!("assignment names unknown tracklet {tid}")))?;
        groups.entry(track).or_default().extend(t.detections.iter().cloned());
    }
    groups
        .into_iter()
        .map(|(track_id, mut detections)| {
            detections.sort_by_key(|d| d.frame);
            if let Some(w) = detections.windows(2).find(|w| w[0].frame == w[1].frame) {
                return Err(Error::Integrity(format!("track {track_id} has two detections in frame {}", w[0].frame)));
            }
            Ok(Trajectory { track_id, detections })
        })
        .collect()
}

/// Fills every missing frame inside the span with a linearly interpolated box.
pub fn interpolate_gaps(trajectory: &Trajectory) -> Trajectory {
    let mut detections = Vec::with_capacity(trajectory.detections.len());
    for (k, d) in trajectory.detections.iter().enumerate() {
        if k > 0 {
            let prev = &trajectory.detections[k - 1];
            let gap = d.frame - prev.frame;
            for step in 1..gap {
                let t = step as f64 / gap as f64;
                let mut fill = Detection::new(prev.frame + step, 0, prev.bbox.lerp(&d.bbox, t), 0.0);
                fill.sequence_id = prev.sequence_id.clone();
                fill.interpolated = true;
                detections.push(fill);
            }
        }
        detections.push(d.clone());
    }
    Trajectory { track_id: trajectory.track_id, detections }
}

/// Drops tracks with fewer than `min_len` detections; 0 keeps everything.
pub fn drop_short_tracks(trajectories: Vec<Trajectory>, min_len: usize) -> Vec<Trajectory> {
    trajectories.into_iter().filter(|t| t.detections.len() >= min_len).collect()
}
