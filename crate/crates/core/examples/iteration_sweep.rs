//! Tracking quality as a function of the number of proposal-generation
//! iterations, on a scenario whose targets disappear once each for 5, 15 or 30 frames.
//!
//! Run with `cargo run --release --example iteration_sweep`.

use proposal_mot::cli::{ablate, format_ablation, AblationParam};
use proposal_mot::model_io::Config;
use proposal_mot::synth::{generate_scenario, mid_sequence_occlusions, ScenarioSpec};

fn main() -> proposal_mot::Result<()> {
    let spec = ScenarioSpec {
        occlusions: mid_sequence_occlusions(5, 200, &[5, 15, 30]),
        ..ScenarioSpec::default()
    };
    let scenario = generate_scenario(&spec)?;
    let values: Vec<f64> = (1..=10).map(f64::from).collect();
    let rows = ablate(&[scenario], AblationParam::Iterations, &values, &Config::default(), None)?;
    print!("{}", format_ablation(AblationParam::Iterations, &rows));
    Ok(())
}
