//! End to end through the file interfaces: writes a synthetic sequence,
//! tracks it with the ground-truth oracle scorer, and evaluates the result.
//!
//! Run with `cargo run --release --example track_sequence`.

use proposal_mot::cli::{cmd_eval, cmd_synth, cmd_track, EvalArgs, ScorerSpec, SynthArgs, TrackArgs};
use proposal_mot::synth::{mid_sequence_occlusions, ScenarioSpec};

fn main() -> proposal_mot::Result<()> {
    let dir = std::env::temp_dir().join("propmot-track");
    std::fs::create_dir_all(&dir)?;

    let spec = ScenarioSpec { occlusions: mid_sequence_occlusions(5, 200, &[10]), ..ScenarioSpec::default() };
    std::fs::write(dir.join("scenario.toml"), spec.to_toml())?;
    let seq = dir.join("seq");
    cmd_synth(&SynthArgs { spec: Some(dir.join("scenario.toml")), out: seq.clone(), seed: None, binary_embeddings: true })?;

    let out = dir.join("result.txt");
    let result = cmd_track(&TrackArgs {
        detections: seq.join("det.txt"),
        embeddings: seq.join("emb.bin"),
        config: None,
        scorer: ScorerSpec::Oracle(seq.join("gt.txt")),
        out: out.clone(),
        seed: Some(0),
        dump_proposals: Some(dir.join("proposals.txt")),
        dump_graph: None,
    })?;
    println!(
        "{} tracklets -> {} proposals -> {} tracks",
        result.tracklets.len(),
        result.proposals.len(),
        result.trajectories.len()
    );
    for s in &result.proposals.iterations {
        println!("  iteration {}: {} vertices, {} edges, {} merges", s.iteration, s.vertices, s.edges, s.merged_clusters);
    }

    let report = cmd_eval(&EvalArgs { pairs: vec![(seq.join("gt.txt"), out)], out: None })?;
    print!("{}", report.to_table());
    println!("outputs in {}", dir.display());
    Ok(())
}
