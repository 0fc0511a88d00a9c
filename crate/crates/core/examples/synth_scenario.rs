//! Generates a synthetic sequence from a TOML scenario and writes it in the
//! on-disk layout the tracker reads (det.txt, emb.csv, gt.txt).
//!
//! Run with `cargo run --example synth_scenario [out_dir]`.

use proposal_mot::synth::{generate_scenario, mid_sequence_occlusions, ScenarioSpec};

fn main() -> proposal_mot::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("propmot-scene"), Into::into);
    let spec = ScenarioSpec {
        num_identities: 4,
        frames: 120,
        embedding_dim: 16,
        embedding_noise: 0.05,
        jitter: 0.5,
        false_positive_rate: 0.05,
        occlusions: mid_sequence_occlusions(4, 120, &[8, 20]),
        seed: 3,
        ..ScenarioSpec::default()
    };
    // the TOML form round-trips, so scenarios can be kept next to results
    let text = spec.to_toml();
    assert_eq!(ScenarioSpec::from_toml(&text)?, spec);

    let scenario = generate_scenario(&spec)?;
    scenario.write_to_dir(&out)?;
    std::fs::write(out.join("scenario.toml"), text)?;
    let fps = scenario.identities.iter().filter(|i| i.is_none()).count();
    println!(
        "{} detections ({fps} false positives), {} ground-truth boxes -> {}",
        scenario.detections.len(),
        scenario.ground_truth.len(),
        out.display()
    );
    Ok(())
}
