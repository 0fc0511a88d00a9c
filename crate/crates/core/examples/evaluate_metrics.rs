//! CLEAR-MOT and IDF1 on a hand-built case: one ground-truth target whose
//! predicted track changes identity halfway, plus a stray false positive.
//!
//! Run with `cargo run --example evaluate_metrics`.

use proposal_mot::metrics::MetricsReport;
use proposal_mot::model_io::{BoundingBox, TrackBox};

fn row(frame: u32, id: u32, x: f64) -> proposal_mot::Result<TrackBox> {
    Ok(TrackBox { frame, id, bbox: BoundingBox::new(x, 100.0, 40.0, 100.0)? })
}

fn main() -> proposal_mot::Result<()> {
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for f in 1..=10 {
        let x = 10.0 * f as f64;
        gt.push(row(f, 1, x)?);
        pred.push(row(f, if f <= 5 { 7 } else { 8 }, x + 2.0)?);
    }
    pred.push(row(4, 9, 900.0)?);
    let report = MetricsReport::single("handmade", &gt, &pred)?;
    print!("{}", report.to_table());
    Ok(())
}
