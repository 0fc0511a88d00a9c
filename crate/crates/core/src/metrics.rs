//! CLEAR-MOT and identity (IDF1) metrics.
//!
//! CLEAR-MOT matching runs frame by frame. A pair matched in the previous
//! frame is kept while its IoU stays at or above the threshold (GT ids
//! ascending, each prediction used once). Remaining boxes are matched by
//! linear assignment on `1 - IoU`, with sub-threshold pairs forbidden. An
//! identity switch is counted when a GT track is matched to a prediction id
//! other than the one it was last matched to.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::assignment::{solve_assignment, CostMatrix, FORBIDDEN};
use crate::error::{Error, Result};
use crate::model_io::{BoundingBox, TrackBox};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Coverage at or above which a GT track is mostly tracked.
pub const MOSTLY_TRACKED: f64 = 0.8;
/// Coverage at or below which a GT track is mostly lost.
pub const MOSTLY_LOST: f64 = 0.2;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.area() + b.area() - inter)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearMot {
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub mota: f64,
    pub mt: usize,
    pub ml: usize,
    pub num_gt: usize,
    pub num_gt_tracks: usize,
}

fn by_frame(boxes: &[TrackBox]) -> BTreeMap<u32, Vec<&TrackBox>> {
    let mut out: BTreeMap<u32, Vec<&TrackBox>> = BTreeMap::new();
    for b in boxes {
        out.entry(b.frame).or_default().push(b);
    }
    for v in out.values_mut() {
        v.sort_by_key(|b| b.id);
    }
    out
}

/// Per-frame CLEAR-MOT counts. Empty ground truth is an error.
pub fn compute_clear_mot(gt: &[TrackBox], pred: &[TrackBox], iou_threshold: f64) -> Result<ClearMot> {
    if gt.is_empty() {
        return Err(Error::Metrics("ground truth is empty".into()));
    }
    let gt_frames = by_frame(gt);
    let pred_frames = by_frame(pred);
    let frames: BTreeSet<u32> = gt_frames.keys().chain(pred_frames.keys()).copied().collect();

    let mut previous: BTreeMap<u32, u32> = BTreeMap::new();
    let mut last_match: BTreeMap<u32, u32> = BTreeMap::new();
    let mut track_len: BTreeMap<u32, usize> = BTreeMap::new();
    let mut track_hits: BTreeMap<u32, usize> = BTreeMap::new();
    let (mut fp, mut fn_, mut ids) = (0, 0, 0);

    for f in frames {
        let gs = gt_frames.get(&f).map(Vec::as_slice).unwrap_or(&[]);
        let ps = pred_frames.get(&f).map(Vec::as_slice).unwrap_or(&[]);
        for g in gs {
            *track_len.entry(g.id).or_default() += 1;
        }

        let mut g_used = vec![false; gs.len()];
        let mut p_used = vec![false; ps.len()];
        let mut current: BTreeMap<u32, u32> = BTreeMap::new();

        for (gi, g) in gs.iter().enumerate() {
            let Some(&pid) = previous.get(&g.id) else { continue };
            if let Some(pi) = ps.iter().position(|p| p.id == pid) {
                if !p_used[pi] && iou(&g.bbox, &ps[pi].bbox) >= iou_threshold {
                    g_used[gi] = true;
                    p_used[pi] = true;
                    current.insert(g.id, pid);
                }
            }
        }

        let gr: Vec<usize> = (0..gs.len()).filter(|&k| !g_used[k]).collect();
        let pr: Vec<usize> = (0..ps.len()).filter(|&k| !p_used[k]).collect();
        if !gr.is_empty() && !pr.is_empty() {
            let mut costs = CostMatrix::forbidden(gr.len(), pr.len());
            for (r, &gi) in gr.iter().enumerate() {
                for (c, &pi) in pr.iter().enumerate() {
                    let v = iou(&gs[gi].bbox, &ps[pi].bbox);
                    costs.set(r, c, if v >= iou_threshold { 1.0 - v } else { FORBIDDEN });
                }
            }
            for (r, c) in solve_assignment(&costs) {
                if costs.is_forbidden(r, c) {
                    continue;
                }
                let (g, p) = (gs[gr[r]], ps[pr[c]]);
                g_used[gr[r]] = true;
                p_used[pr[c]] = true;
                current.insert(g.id, p.id);
                if last_match.get(&g.id).is_some_and(|&old| old != p.id) {
                    ids += 1;
                }
            }
        }

        fn_ += g_used.iter().filter(|u| !**u).count();
        fp += p_used.iter().filter(|u| !**u).count();
        for (&g, &p) in &current {
            last_match.insert(g, p);
            *track_hits.entry(g).or_default() += 1;
        }
        previous = current;
    }

    let (mut mt, mut ml) = (0, 0);
    for (id, &len) in &track_len {
        let cover = track_hits.get(id).copied().unwrap_or(0) as f64 / len as f64;
        if cover >= MOSTLY_TRACKED {
            mt += 1;
        } else if cover <= MOSTLY_LOST {
            ml += 1;
        }
    }
    let num_gt = gt.len();
    let mota = 1.0 - (fp + fn_ + ids) as f64 / num_gt as f64;
    Ok(ClearMot { fp, fn_, ids, mota, mt, ml, num_gt, num_gt_tracks: track_len.len() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Idf1 {
    pub idf1: f64,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

impl Idf1 {
    pub fn from_counts(idtp: usize, idfp: usize, idfn: usize) -> Self {
        let denom = 2 * idtp + idfp + idfn;
        let idf1 = if denom == 0 { 1.0 } else { 2.0 * idtp as f64 / denom as f64 };
        Self { idf1, idtp, idfp, idfn }
    }
}

/// Frames in which GT track `i` and predicted track `j` overlap above the threshold.
pub fn identity_overlaps(gt: &[TrackBox], pred: &[TrackBox], iou_threshold: f64) -> (Vec<u32>, Vec<u32>, Vec<Vec<usize>>) {
    let gt_ids: Vec<u32> = gt.iter().map(|b| b.id).collect::<BTreeSet<_>>().into_iter().collect();
    let pred_ids: Vec<u32> = pred.iter().map(|b| b.id).collect::<BTreeSet<_>>().into_iter().collect();
    let gi: BTreeMap<u32, usize> = gt_ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let pi: BTreeMap<u32, usize> = pred_ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let mut overlap = vec![vec![0; pred_ids.len()]; gt_ids.len()];
    let pred_frames = by_frame(pred);
    for g in gt {
        for p in pred_frames.get(&g.frame).map(Vec::as_slice).unwrap_or(&[]) {
            if iou(&g.bbox, &p.bbox) >= iou_threshold {
                overlap[gi[&g.id]][pi[&p.id]] += 1;
            }
        }
    }
    (gt_ids, pred_ids, overlap)
}

/// IDF1 under the one-to-one track matching with the most co-tracked frames.
/// Both sides empty gives 1.
pub fn compute_idf1(gt: &[TrackBox], pred: &[TrackBox], iou_threshold: f64) -> Idf1 {
    let (gt_ids, pred_ids, overlap) = identity_overlaps(gt, pred, iou_threshold);
    let mut idtp = 0;
    if !gt_ids.is_empty() && !pred_ids.is_empty() {
        let data = overlap.iter().flat_map(|row| row.iter().map(|&n| -(n as f64))).collect();
        let costs = CostMatrix::new(gt_ids.len(), pred_ids.len(), data).expect("finite costs");
        idtp = solve_assignment(&costs).iter().map(|&(r, c)| overlap[r][c]).sum();
    }
    Idf1::from_counts(idtp, pred.len() - idtp, gt.len() - idtp)
}

/// Metrics for one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceMetrics {
    pub clear: ClearMot,
    pub identity: Idf1,
}

pub fn evaluate_sequence(gt: &[TrackBox], pred: &[TrackBox]) -> Result<SequenceMetrics> {
    Ok(SequenceMetrics {
        clear: compute_clear_mot(gt, pred, DEFAULT_IOU_THRESHOLD)?,
        identity: compute_idf1(gt, pred, DEFAULT_IOU_THRESHOLD),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mota: f64,
    pub idf1: f64,
    pub mt: usize,
    pub ml: usize,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub num_gt: usize,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    pub sequences: Vec<(String, SequenceMetrics)>,
}

impl MetricsReport {
    /// Pools counts over sequences and recomputes the ratios.
    pub fn from_sequences(sequences: Vec<(String, SequenceMetrics)>) -> Result<Self> {
        let sum = |f: fn(&SequenceMetrics) -> usize| sequences.iter().map(|(_, m)| f(m)).sum::<usize>();
        let num_gt = sum(|m| m.clear.num_gt);
        if num_gt == 0 {
            return Err(Error::Metrics("ground truth is empty".into()));
        }
        let (fp, fn_, ids) = (sum(|m| m.clear.fp), sum(|m| m.clear.fn_), sum(|m| m.clear.ids));
        let identity = Idf1::from_counts(sum(|m| m.identity.idtp), sum(|m| m.identity.idfp), sum(|m| m.identity.idfn));
        Ok(Self {
            mota: 1.0 - (fp + fn_ + ids) as f64 / num_gt as f64,
            idf1: identity.idf1,
            mt: sum(|m| m.clear.mt),
            ml: sum(|m| m.clear.ml),
            fp,
            fn_,
            ids,
            num_gt,
            idtp: identity.idtp,
            idfp: identity.idfp,
            idfn: identity.idfn,
            sequences,
        })
    }

    pub fn single(name: &str, gt: &[TrackBox], pred: &[TrackBox]) -> Result<Self> {
        Self::from_sequences(vec![(name.to_string(), evaluate_sequence(gt, pred)?)])
    }

    /// Aligned table, one row per sequence plus an overall row.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<16} {:>8} {:>8} {:>5} {:>5} {:>7} {:>7} {:>5}", "sequence", "MOTA", "IDF1", "MT", "ML", "FP", "FN", "IDs").unwrap();
        let mut row = |name: &str, mota: f64, idf1: f64, mt, ml, fp, fn_, ids| {
            writeln!(s, "{name:<16} {:>8.4} {:>8.4} {mt:>5} {ml:>5} {fp:>7} {fn_:>7} {ids:>5}", mota, idf1).unwrap();
        };
        for (name, m) in &self.sequences {
            let c = &m.clear;
            row(name, c.mota, m.identity.idf1, c.mt, c.ml, c.fp, c.fn_, c.ids);
        }
        row("OVERALL", self.mota, self.idf1, self.mt, self.ml, self.fp, self.fn_, self.ids);
        s
    }

    /// `key=value` lines; per-sequence keys are prefixed with the sequence name.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut put = |prefix: &str, m: (f64, f64, usize, usize, usize, usize, usize, usize, usize, usize, usize)| {
            let keys = ["mota", "idf1", "mt", "ml", "fp", "fn", "ids", "num_gt", "idtp", "idfp", "idfn"];
            writeln!(s, "{prefix}{}={}", keys[0], m.0).unwrap();
            writeln!(s, "{prefix}{}={}", keys[1], m.1).unwrap();
            let rest = [m.2, m.3, m.4, m.5, m.6, m.7, m.8, m.9, m.10];
            for (k, v) in keys[2..].iter().zip(rest) {
                writeln!(s, "{prefix}{k}={v}").unwrap();
            }
        };
        put("", (self.mota, self.idf1, self.mt, self.ml, self.fp, self.fn_, self.ids, self.num_gt, self.idtp, self.idfp, self.idfn));
        for (name, m) in &self.sequences {
            let (c, i) = (&m.clear, &m.identity);
            put(&format!("{name}."), (c.mota, i.idf1, c.mt, c.ml, c.fp, c.fn_, c.ids, c.num_gt, i.idtp, i.idfp, i.idfn));
        }
        s
    }
}
