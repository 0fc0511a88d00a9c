//! Minimum-cost linear assignment (Hungarian / Kuhn-Munkres).
//!
//! Rectangular matrices are padded to square. Forbidden cells are replaced by a
//! penalty larger than any achievable spread of allowed costs, so the solver
//! first maximizes the number of allowed pairs and then minimizes their cost.
//! Among optimal matchings the lexicographically smallest pair list is
//! returned: the optimal dual potentials define an equality subgraph whose
//! perfect matchings are exactly the optimal ones, and rows are fixed greedily
//! to their smallest feasible column.

use crate::error::{Error, Result};

/// Marks a disallowed (row, column) pair.
pub const FORBIDDEN: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        if data.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
            return Err(Error::Input("cost entries must be finite or FORBIDDEN".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// All-FORBIDDEN matrix to be filled with [`CostMatrix::set`].
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![FORBIDDEN; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged cost rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, cost: f64) {
        assert!(!cost.is_nan(), "NaN cost");
        self.data[r * self.cols + c] = cost;
    }

    pub fn is_forbidden(&self, r: usize, c: usize) -> bool {
        self.get(r, c) == FORBIDDEN
    }

    /// Sum of the costs of `pairs`.
    pub fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(r, c)| self.get(r, c)).sum()
    }
}

/// Solves the assignment problem. Returned pairs are sorted by row.
pub fn solve_assignment(costs: &CostMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = (costs.rows, costs.cols);
    if rows == 0 || cols == 0 || costs.data.iter().all(|c| *c == FORBIDDEN) {
        return Vec::new();
    }
    let n = rows.max(cols);
    let max_abs = costs.data.iter().filter(|c| c.is_finite()).fold(0.0f64, |m, c| m.max(c.abs()));
    // exceeds the spread 2 * n * max_abs of any two sets of allowed costs
    let penalty = 4.0 * (n as f64) * (max_abs + 1.0);

    let mut square = vec![0.0; n * n];
    for r in 0..rows {
        for c in 0..cols {
            let v = costs.get(r, c);
            square[r * n + c] = if v == FORBIDDEN { penalty } else { v };
        }
    }

    let (u, v) = hungarian_potentials(&square, n);

    let scale = square.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-9 * scale;
    // equality subgraph, classified into real columns and "leave unmatched" columns
    let tight = |r: usize, c: usize| (square[r * n + c] - u[r] - v[c]).abs() <= tol;
    let is_real = |r: usize, c: usize| r < rows && c < cols && costs.get(r, c) != FORBIDDEN;

    let mut allowed: Vec<Vec<usize>> = (0..n).map(|r| (0..n).filter(|&c| tight(r, c)).collect()).collect();
    let mut pairs = Vec::new();
    for r in 0..rows {
        let full = allowed[r].clone();
        let mut chosen = None;
        for &c in full.iter().filter(|&&c| is_real(r, c)) {
            allowed[r] = vec![c];
            if has_perfect_matching(&allowed, n) {
                chosen = Some(c);
                break;
            }
        }
        match chosen {
            Some(c) => pairs.push((r, c)),
            None => {
                allowed[r] = full.into_iter().filter(|&c| !is_real(r, c)).collect();
                debug_assert!(has_perfect_matching(&allowed, n));
            }
        }
    }
    pairs
}

/// Dual potentials `(u, v)` of an optimal assignment on an `n x n` matrix:
/// `cost[r][c] - u[r] - v[c] >= 0` everywhere, with equality on an optimal matching.
fn hungarian_potentials(cost: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    // 1-based shortest augmenting path formulation; index 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (u[1..].to_vec(), v[1..].to_vec())
}

/// Kuhn's augmenting-path check for a perfect matching in a bipartite graph.
fn has_perfect_matching(adj: &[Vec<usize>], n: usize) -> bool {
    fn augment(r: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &c in &adj[r] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            if owner[c].is_none_or(|o| augment(o, adj, seen, owner)) {
                owner[c] = Some(r);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n];
    (0..n).all(|r| {
        let mut seen = vec![false; n];
        augment(r, adj, &mut seen, &mut owner)
    })
}
