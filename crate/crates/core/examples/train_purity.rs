//! Trains the purity network on proposals from synthetic scenes and reports
//! accuracy on scenes it never saw, once per loss.
//!
//! Run with `cargo run --release --example train_purity`.

use proposal_mot::cli::synthetic_corpus;
use proposal_mot::model_io::Config;
use proposal_mot::scoring::{accuracy, train_gcn, Loss};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> proposal_mot::Result<()> {
    let config = Config {
        embedding_dim: 32,
        gcn_hidden: vec![32, 32, 32, 32],
        // wide gates so that proposals also mix identities
        gate_appearance: 8.0,
        gate_time: 120.0,
        gate_position: 600.0,
        max_cluster_size: 3,
        max_iterations: 6,
        batch_size: 64,
        augment_copies: 3,
        random_groups: 150,
        ..Config::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let train = synthetic_corpus(0..90, &config, &mut rng)?;
    let test = synthetic_corpus(100..106, &config, &mut rng)?;
    println!("{} training samples, {} held-out samples", train.len(), test.len());

    for loss in [Loss::Bce, Loss::Mse] {
        let c = Config { loss, ..config.clone() };
        let t0 = std::time::Instant::now();
        let report = train_gcn(&train, &c, &mut ChaCha8Rng::seed_from_u64(1))?;
        println!(
            "{loss:?}: loss {:.4} -> {:.4}, train accuracy {:.4}, held-out accuracy {:.4} ({:.1}s)",
            report.initial_loss,
            report.final_loss(),
            report.accuracy,
            accuracy(&report.model, &test)?,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
