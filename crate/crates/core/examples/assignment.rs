//! Solves a small rectangular assignment problem with forbidden pairs and
//! compares the result with the best permutation found by enumeration.
//!
//! Run with `cargo run --example assignment`.

use proposal_mot::assignment::{solve_assignment, CostMatrix, FORBIDDEN};

fn main() -> proposal_mot::Result<()> {
    // three tracks (rows) against four detections (columns)
    let costs = CostMatrix::from_rows(&[
        vec![0.2, 0.9, FORBIDDEN, 0.7],
        vec![0.3, FORBIDDEN, 0.6, 0.8],
        vec![FORBIDDEN, 0.1, 0.5, FORBIDDEN],
    ])?;
    let pairs = solve_assignment(&costs);
    for &(r, c) in &pairs {
        println!("track {r} -> detection {c} (cost {:.1})", costs.get(r, c));
    }
    println!("total {:.2}", costs.total(&pairs));

    let mut best = f64::INFINITY;
    for a in 0..4 {
        for b in (0..4).filter(|&b| b != a) {
            for c in (0..4).filter(|&c| c != a && c != b) {
                let p = [(0, a), (1, b), (2, c)];
                if p.iter().all(|&(r, c)| !costs.is_forbidden(r, c)) {
                    best = best.min(costs.total(&p));
                }
            }
        }
    }
    println!("enumerated optimum {best:.2}");
    Ok(())
}
