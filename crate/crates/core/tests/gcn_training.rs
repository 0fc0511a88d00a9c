mod common;

use common::{gradient_check, random_model_and_input};
use nalgebra::DMatrix;
use proposal_mot::model_io::Config;
use proposal_mot::scoring::{accuracy, train_gcn, GcnInput, GcnModel, Loss, TrainingSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 0..50 {
        let (model, input) = random_model_and_input(&mut rng);
        let loss = if k % 2 == 0 { Loss::Bce } else { Loss::Mse };
        let label = f64::from(rng.random_range(0..2u8));
        let err = gradient_check(&model, &input, label, loss, 1e-5);
        assert!(err <= 1e-4, "case {k} ({loss:?}): relative error {err:e}");
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Pure proposals: one direction plus small noise and high mutual affinity.
/// Impure ones: two unrelated directions and low affinity between them.
fn toy_sample(rng: &mut ChaCha8Rng, dim: usize, pure: bool) -> TrainingSample {
    let n = rng.random_range(2..=4);
    let mut dir = || unit((0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect::<Vec<f64>>());
    let (a, b) = (dir(), dir());
    let group: Vec<usize> = (0..n).map(|i| if pure || i % 2 == 0 { 0 } else { 1 }).collect();
    let mut features = DMatrix::zeros(n, dim + 5);
    for (r, &g) in group.iter().enumerate() {
        let base = if g == 0 { &a } else { &b };
        for c in 0..dim {
            features[(r, c)] = base[c] + 0.05 * rng.random_range(-1.0..1.0);
        }
        features[(r, dim)] = if r == 0 { 1.0 } else { 0.0 };
        features[(r, dim + 4)] = if r == 0 { 0.0 } else { rng.random_range(1.0..10.0) };
    }
    let mut affinity = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if group[i] == group[j] { rng.random_range(0.8..0.95) } else { rng.random_range(0.2..0.45) };
            affinity[(i, j)] = v;
            affinity[(j, i)] = v;
        }
    }
    TrainingSample { input: GcnInput { features, affinity }, label: if pure { 1.0 } else { 0.0 } }
}

fn toy_config() -> Config {
    Config {
        embedding_dim: 8,
        gcn_layers: 2,
        gcn_hidden: vec![32, 32],
        batch_size: 32,
        training_iterations: 200,
        ..Config::default()
    }
}

#[test]
fn separable_toy_set_is_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<TrainingSample> = (0..400).map(|k| toy_sample(&mut rng, 8, k % 2 == 0)).collect();
    for loss in [Loss::Bce, Loss::Mse] {
        let report = train_gcn(&samples, &Config { loss, ..toy_config() }, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(report.accuracy >= 0.95, "{loss:?}: accuracy {}", report.accuracy);
        assert!(report.final_loss() <= report.initial_loss);
        assert_eq!(accuracy(&report.model, &samples).unwrap(), report.accuracy);
    }
}

#[test]
fn training_is_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<TrainingSample> = (0..100).map(|k| toy_sample(&mut rng, 8, k % 3 == 0)).collect();
    let config = Config { training_iterations: 5, ..toy_config() };
    let a = train_gcn(&samples, &config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = train_gcn(&samples, &config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a.model.flatten(), b.model.flatten());
    assert_eq!(a.epoch_losses, b.epoch_losses);
}

#[test]
fn zero_iterations_returns_the_initial_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<TrainingSample> = (0..10).map(|k| toy_sample(&mut rng, 8, k % 2 == 0)).collect();
    let config = Config { training_iterations: 0, ..toy_config() };
    let report = train_gcn(&samples, &config, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let fresh = GcnModel::from_config(&config, &mut ChaCha8Rng::seed_from_u64(3));
    assert_eq!(report.model, fresh);
}

#[test]
fn empty_or_mismatched_corpus_is_rejected() {
    let config = toy_config();
    assert!(train_gcn(&[], &config, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    let wrong = toy_sample(&mut ChaCha8Rng::seed_from_u64(0), 3, true);
    assert!(train_gcn(&[wrong], &config, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

