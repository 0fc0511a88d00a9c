//! Ground-truth labels for proposals and the quality score used for ranking.

use std::collections::BTreeMap;

use crate::metrics::iou;
use crate::model_io::{Config, Detection, GroundTruthEntry};
use crate::preprocess::Tracklet;

/// IoU a detection needs to inherit a ground-truth identity.
pub const LABEL_IOU: f64 = 0.5;

/// Ground-truth identity of every detection, `None` for unmatched ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionLabels {
    pub by_key: BTreeMap<(u32, u32), Option<u32>>,
    /// Matched detections per identity.
    pub identity_counts: BTreeMap<u32, usize>,
}

impl DetectionLabels {
    pub fn identity(&self, d: &Detection) -> Option<u32> {
        self.by_key.get(&d.key()).copied().flatten()
    }
}

/// Greedy per-frame matching: pairs are taken in order of decreasing IoU
/// (ties by detection index, then identity) while both sides are free.
pub fn label_detections(detections: &[Detection], ground_truth: &[GroundTruthEntry]) -> DetectionLabels {
    let mut gt_by_frame: BTreeMap<u32, Vec<&GroundTruthEntry>> = BTreeMap::new();
    for g in ground_truth {
        gt_by_frame.entry(g.frame).or_default().push(g);
    }
    let mut det_by_frame: BTreeMap<u32, Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        det_by_frame.entry(d.frame).or_default().push(d);
    }

    let mut labels = DetectionLabels::default();
    for (frame, dets) in det_by_frame {
        let gts = gt_by_frame.get(&frame).map(Vec::as_slice).unwrap_or(&[]);
        let mut pairs = Vec::new();
        for (di, d) in dets.iter().enumerate() {
            for (gi, g) in gts.iter().enumerate() {
                let v = iou(&d.bbox, &g.bbox);
                if v >= LABEL_IOU {
                    pairs.push((v, d.index_in_frame, g.identity, di, gi));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut det_match = vec![None; dets.len()];
        let mut gt_used = vec![false; gts.len()];
        for (_, _, id, di, gi) in pairs {
            if det_match[di].is_none() && !gt_used[gi] {
                det_match[di] = Some(id);
                gt_used[gi] = true;
            }
        }
        for (d, m) in dets.iter().zip(det_match) {
            labels.by_key.insert(d.key(), m);
            if let Some(id) = m {
                *labels.identity_counts.entry(id).or_default() += 1;
            }
        }
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalLabel {
    /// A single identity, with no unmatched detections.
    pub pure: bool,
    /// Share of the major identity's detections held by the proposal.
    pub rec: f64,
    /// 1 when pure, else 0.
    pub prec: f64,
    pub major: Option<u32>,
}

/// Labels a proposal given by its member tracklets. Unmatched detections
/// count as one extra identity.
pub fn label_proposal(members: &[&Tracklet], labels: &DetectionLabels) -> ProposalLabel {
    let mut counts: BTreeMap<Option<u32>, usize> = BTreeMap::new();
    for t in members {
        for d in &t.detections {
            *counts.entry(labels.identity(d)).or_default() += 1;
        }
    }
    // max count, smaller id on ties; BTreeMap iterates ids ascending
    let mut major: Option<(u32, usize)> = None;
    for (id, &n) in &counts {
        if let Some(id) = id {
            if major.is_none_or(|(_, best)| n > best) {
                major = Some((*id, n));
            }
        }
    }
    let Some((id, n)) = major else {
        return ProposalLabel { pure: false, rec: 0.0, prec: 0.0, major: None };
    };
    let pure = counts.len() == 1;
    let total = labels.identity_counts.get(&id).copied().unwrap_or(n);
    ProposalLabel { pure, rec: n as f64 / total as f64, prec: if pure { 1.0 } else { 0.0 }, major: Some(id) }
}

/// `size / C + w * purity`.
pub fn quality_score(size_in_detections: usize, purity: f64, config: &Config) -> f64 {
    size_in_detections as f64 / config.length_normalizer + config.quality_weight * purity
}

/// Quality score with the ground-truth purity.
pub fn oracle_score(members: &[&Tracklet], labels: &DetectionLabels, config: &Config) -> f64 {
    let size = members.iter().map(|t| t.len()).sum();
    quality_score(size, label_proposal(members, labels).prec, config)
}
