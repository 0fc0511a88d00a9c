//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use proposal_mot::model_io::{BoundingBox, TrackBox};
use proposal_mot::scoring::{GcnInput, GcnModel, Loss};
use rand::Rng;

/// Minimum over all injective row-to-column maps (rows <= cols) by enumeration.
pub fn brute_force_min(costs: &[Vec<f64>]) -> f64 {
    fn go(costs: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == costs.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.min(costs[row][c] + go(costs, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    let cols = costs.first().map_or(0, Vec::len);
    if costs.len() <= cols {
        go(costs, 0, &mut vec![false; cols])
    } else {
        let t: Vec<Vec<f64>> = (0..cols).map(|c| costs.iter().map(|r| r[c]).collect()).collect();
        go(&t, 0, &mut vec![false; costs.len()])
    }
}

/// IoU from corner coordinates.
pub fn ref_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax2, ay2, bx2, by2) = (a.x + a.w, a.y + a.h, b.x + b.w, b.y + b.h);
    let w = ax2.min(bx2) - a.x.max(b.x);
    let h = ay2.min(by2) - a.y.max(b.y);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h / (a.w * a.h + b.w * b.h - w * h)
    }
}

/// Every partial matching between `n` rows and `m` columns allowed by `ok`.
fn all_matchings(n: usize, m: usize, ok: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    fn go(
        r: usize,
        n: usize,
        m: usize,
        ok: &dyn Fn(usize, usize) -> bool,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if r == n {
            out.push(cur.clone());
            return;
        }
        go(r + 1, n, m, ok, used, cur, out);
        for c in 0..m {
            if !used[c] && ok(r, c) {
                used[c] = true;
                cur.push((r, c));
                go(r + 1, n, m, ok, used, cur, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, m, ok, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefClear {
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub mota: f64,
    pub mt: usize,
    pub ml: usize,
}

/// CLEAR-MOT with the remainder matching chosen by enumerating every
/// matching: most pairs, then least total `1 - IoU`, then the
/// lexicographically smallest pair list (boxes ordered by id).
pub fn ref_clear_mot(gt: &[TrackBox], pred: &[TrackBox], thr: f64) -> RefClear {
    let frames: BTreeSet<u32> = gt.iter().chain(pred).map(|b| b.frame).collect();
    let mut prev: BTreeMap<u32, u32> = BTreeMap::new();
    let mut last: BTreeMap<u32, u32> = BTreeMap::new();
    let mut len: BTreeMap<u32, usize> = BTreeMap::new();
    let mut hits: BTreeMap<u32, usize> = BTreeMap::new();
    let (mut fp, mut fn_, mut ids) = (0, 0, 0);
    for f in frames {
        let mut gs: Vec<&TrackBox> = gt.iter().filter(|b| b.frame == f).collect();
        let mut ps: Vec<&TrackBox> = pred.iter().filter(|b| b.frame == f).collect();
        gs.sort_by_key(|b| b.id);
        ps.sort_by_key(|b| b.id);
        for g in &gs {
            *len.entry(g.id).or_default() += 1;
        }
        let mut cur: BTreeMap<u32, u32> = BTreeMap::new();
        let mut pused: BTreeSet<u32> = BTreeSet::new();
        for g in &gs {
            if let Some(&pid) = prev.get(&g.id) {
                if let Some(p) = ps.iter().find(|p| p.id == pid) {
                    if !pused.contains(&pid) && ref_iou(&g.bbox, &p.bbox) >= thr {
                        cur.insert(g.id, pid);
                        pused.insert(pid);
                    }
                }
            }
        }
        let gr: Vec<&TrackBox> = gs.iter().copied().filter(|g| !cur.contains_key(&g.id)).collect();
        let pr: Vec<&TrackBox> = ps.iter().copied().filter(|p| !pused.contains(&p.id)).collect();
        let ok = |r: usize, c: usize| ref_iou(&gr[r].bbox, &pr[c].bbox) >= thr;
        let cost = |m: &Vec<(usize, usize)>| m.iter().map(|&(r, c)| 1.0 - ref_iou(&gr[r].bbox, &pr[c].bbox)).sum::<f64>();
        let best = all_matchings(gr.len(), pr.len(), &ok).into_iter().min_by(|a, b| {
            b.len().cmp(&a.len()).then(cost(a).total_cmp(&cost(b))).then(a.cmp(b))
        });
        for (r, c) in best.unwrap_or_default() {
            let (g, p) = (gr[r], pr[c]);
            if last.get(&g.id).is_some_and(|&o| o != p.id) {
                ids += 1;
            }
            cur.insert(g.id, p.id);
            pused.insert(p.id);
        }
        fn_ += gs.len() - cur.len();
        fp += ps.len() - cur.len();
        for (&g, &p) in &cur {
            last.insert(g, p);
            *hits.entry(g).or_default() += 1;
        }
        prev = cur;
    }
    let mut mt = 0;
    let mut ml = 0;
    for (id, &n) in &len {
        let c = *hits.get(id).unwrap_or(&0) as f64 / n as f64;
        if c >= 0.8 {
            mt += 1;
        } else if c <= 0.2 {
            ml += 1;
        }
    }
    RefClear { fp, fn_, ids, mota: 1.0 - (fp + fn_ + ids) as f64 / gt.len() as f64, mt, ml }
}

/// `(idtp, idfp, idfn)` from the best one-to-one track matching, by enumeration.
pub fn ref_idf1_counts(gt: &[TrackBox], pred: &[TrackBox], thr: f64) -> (usize, usize, usize) {
    let gids: Vec<u32> = gt.iter().map(|b| b.id).collect::<BTreeSet<_>>().into_iter().collect();
    let pids: Vec<u32> = pred.iter().map(|b| b.id).collect::<BTreeSet<_>>().into_iter().collect();
    let co = |g: u32, p: u32| {
        gt.iter()
            .filter(|a| a.id == g)
            .map(|a| pred.iter().filter(|b| b.id == p && b.frame == a.frame && ref_iou(&a.bbox, &b.bbox) >= thr).count())
            .sum::<usize>()
    };
    let tp = all_matchings(gids.len(), pids.len(), &|_, _| true)
        .iter()
        .map(|m| m.iter().map(|&(r, c)| co(gids[r], pids[c])).sum::<usize>())
        .max()
        .unwrap_or(0);
    (tp, pred.len() - tp, gt.len() - tp)
}

/// Up to `max_tracks` tracks over `frames` frames, one box per track per
/// frame present; boxes drift around a shared center so IoUs straddle 0.5.
pub fn random_tracks<R: Rng>(rng: &mut R, max_tracks: u32, frames: u32, id_base: u32) -> Vec<TrackBox> {
    let n = rng.random_range(1..=max_tracks);
    let mut out = Vec::new();
    for k in 0..n {
        let (mut x, mut y) = (rng.random_range(0.0..30.0), rng.random_range(0.0..30.0));
        for f in 1..=frames {
            x += rng.random_range(-6.0..6.0);
            y += rng.random_range(-6.0..6.0);
            if rng.random_bool(0.8) {
                let bbox = BoundingBox::new(x, y, rng.random_range(18.0..26.0), rng.random_range(18.0..26.0)).unwrap();
                out.push(TrackBox { frame: f, id: id_base + k, bbox });
            }
        }
    }
    out
}

/// Random model with hidden widths in `1..=8` and a random proposal input
/// with `1..=5` vertices.
pub fn random_model_and_input<R: Rng>(rng: &mut R) -> (GcnModel, GcnInput) {
    let dim = rng.random_range(1..=3);
    let layers = rng.random_range(1..=3);
    let hidden: Vec<usize> = (0..layers).map(|_| rng.random_range(1..=8)).collect();
    let model = GcnModel::new(dim, &hidden, rng);
    let n = rng.random_range(1..=5);
    let features = DMatrix::from_fn(n, dim + 5, |_, _| rng.random_range(-1.0..1.0));
    let mut affinity = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let a = rng.random_range(0.0..1.0);
            affinity[(i, j)] = a;
            affinity[(j, i)] = a;
        }
    }
    (model, GcnInput { features, affinity })
}

/// Largest relative error between analytic and central-difference gradients.
pub fn gradient_check(model: &GcnModel, input: &GcnInput, label: f64, loss: Loss, step: f64) -> f64 {
    let (_, grads) = model.gradients(input, label, loss).unwrap();
    let analytic = grads.flatten();
    let base = model.flatten();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut at = |delta: f64| {
            let mut w = base.clone();
            w[k] += delta;
            probe.set_flat(&w);
            probe.gradients(input, label, loss).unwrap().0
        };
        let numeric = (at(step) - at(-step)) / (2.0 * step);
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
