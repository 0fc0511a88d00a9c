use std::fs;
use std::path::{Path, PathBuf};

use proposal_mot::cli::{cmd_eval, cmd_track, cmd_train, run, EvalArgs, ScorerSpec, TrackArgs, TrainArgs};
use proposal_mot::model_io::parse_tracking_output;
use proposal_mot::scoring::GcnModel;
use proposal_mot::synth::{mid_sequence_occlusions, ScenarioSpec};
use tempfile::TempDir;

fn propmot(args: &[&str]) -> i32 {
    run(std::iter::once("propmot").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a scenario file and generates the sequence directory `name`.
fn synth(dir: &Path, name: &str, spec: &ScenarioSpec) -> PathBuf {
    let spec_path = dir.join(format!("{name}.toml"));
    fs::write(&spec_path, spec.to_toml()).unwrap();
    let out = dir.join(name);
    assert_eq!(propmot(&["synth", "--spec", s(&spec_path), "--out", s(&out)]), 0);
    out
}

fn small_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        num_identities: 3,
        frames: 80,
        embedding_dim: 16,
        occlusions: mid_sequence_occlusions(3, 80, &[6]),
        seed,
        ..ScenarioSpec::default()
    }
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn oracle_run_on_clean_scene_is_perfect() {
    let dir = TempDir::new().unwrap();
    let seq = synth(dir.path(), "seq", &small_spec(1));
    let config = write_config(dir.path(), "embedding_dim = 16\n");
    let out = dir.path().join("out.txt");
    let scorer = format!("oracle:{}", s(&seq.join("gt.txt")));
    let code = propmot(&[
        "track", "--det", s(&seq.join("det.txt")), "--emb", s(&seq.join("emb.csv")), "--config", s(&config),
        "--scorer", &scorer, "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    assert!(dir.path().join("out.txt.manifest").exists());
    assert!(dir.path().join("out.txt.timings").exists());

    let report_path = dir.path().join("metrics.txt");
    let code = propmot(&["eval", "--gt", s(&seq.join("gt.txt")), "--result", s(&out), "--out", s(&report_path)]);
    assert_eq!(code, 0);
    let report = fs::read_to_string(&report_path).unwrap();
    assert!(report.starts_with("mota=1\nidf1=1\n"), "{report}");
}

#[test]
fn identical_result_evaluates_to_one() {
    let dir = TempDir::new().unwrap();
    let seq = synth(dir.path(), "seq", &small_spec(2));
    let gt = seq.join("gt.txt");
    let r = cmd_eval(&EvalArgs { pairs: vec![(gt.clone(), gt)], out: None }).unwrap();
    assert_eq!((r.mota, r.idf1), (1.0, 1.0));
    assert!(cmd_eval(&EvalArgs { pairs: vec![], out: None }).is_err());
}

#[test]
fn empty_detections_give_empty_output() {
    let dir = TempDir::new().unwrap();
    let det = dir.path().join("det.txt");
    let emb = dir.path().join("emb.csv");
    let gt = dir.path().join("gt.txt");
    for p in [&det, &emb, &gt] {
        fs::write(p, "").unwrap();
    }
    let out = dir.path().join("out.txt");
    let result = cmd_track(&TrackArgs {
        detections: det,
        embeddings: emb,
        config: None,
        scorer: ScorerSpec::Oracle(gt),
        out: out.clone(),
        seed: None,
        dump_proposals: None,
        dump_graph: None,
    })
    .unwrap();
    assert!(result.trajectories.is_empty());
    assert_eq!(fs::read_to_string(out).unwrap(), "");
}

#[test]
fn bad_inputs_fail_with_nonzero_status() {
    let dir = TempDir::new().unwrap();
    let seq = synth(dir.path(), "seq", &small_spec(3));
    let det = seq.join("det.txt");
    let emb = seq.join("emb.csv");
    let out = dir.path().join("out.txt");
    let oracle = format!("oracle:{}", s(&seq.join("gt.txt")));

    let bad = write_config(dir.path(), "threshold_step = 0\nembedding_dim = 16\n");
    let args = ["track", "--det", s(&det), "--emb", s(&emb), "--config", s(&bad), "--scorer", &oracle, "--out", s(&out)];
    assert_ne!(propmot(&args), 0);

    // embedding width differs from the default config
    assert_ne!(propmot(&["track", "--det", s(&det), "--emb", s(&emb), "--scorer", &oracle, "--out", s(&out)]), 0);

    let missing = dir.path().join("nope.txt");
    assert_ne!(propmot(&["track", "--det", s(&missing), "--emb", s(&emb), "--scorer", &oracle, "--out", s(&out)]), 0);
    assert_ne!(propmot(&["track", "--det", s(&det), "--emb", s(&emb), "--scorer", "magic:x", "--out", s(&out)]), 0);
    assert_ne!(propmot(&["frobnicate"]), 0);
    assert!(!out.exists());
}

#[test]
fn tracking_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec = ScenarioSpec { jitter: 1.0, box_noise: 1.0, embedding_noise: 0.05, false_positive_rate: 0.1, ..small_spec(4) };
    let seq = synth(dir.path(), "seq", &spec);
    let config = write_config(dir.path(), "embedding_dim = 16\n");
    let run_once = |name: &str| {
        let out = dir.path().join(name).join("out.txt");
        fs::create_dir_all(out.parent().unwrap()).unwrap();
        cmd_track(&TrackArgs {
            detections: seq.join("det.txt"),
            embeddings: seq.join("emb.csv"),
            config: Some(config.clone()),
            scorer: ScorerSpec::Oracle(seq.join("gt.txt")),
            out: out.clone(),
            seed: Some(5),
            dump_proposals: Some(out.with_extension("proposals")),
            dump_graph: Some(out.with_extension("graph")),
        })
        .unwrap();
        ["out.txt", "out.txt.manifest", "out.proposals", "out.graph"]
            .map(|f| fs::read(dir.path().join(name).join(f)).unwrap())
    };
    assert_eq!(run_once("a"), run_once("b"));
}

#[test]
fn train_then_track_with_the_model() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a", &ScenarioSpec { embedding_noise: 0.1, ..small_spec(5) });
    let b = synth(dir.path(), "b", &ScenarioSpec { embedding_noise: 0.1, ..small_spec(6) });
    let config = write_config(
        dir.path(),
        "embedding_dim = 16\ngcn_layers = 2\ngcn_hidden = [8, 8]\ntraining_iterations = 5\nbatch_size = 16\nrandom_groups = 20\n",
    );
    let model = dir.path().join("model.txt");
    let args = TrainArgs {
        sequences: vec![a.clone(), b],
        config: Some(config.clone()),
        out: model.clone(),
        seed: Some(1),
        holdout: Some(1),
        dump_samples: Some(dir.path().join("samples.txt")),
    };
    let outcome = cmd_train(&args).unwrap();
    assert!(outcome.holdout_accuracy.is_some());
    let first = fs::read(&model).unwrap();
    cmd_train(&args).unwrap();
    assert_eq!(fs::read(&model).unwrap(), first);
    let report = fs::read_to_string(dir.path().join("model.txt.report")).unwrap();
    assert!(report.contains("holdout_accuracy="));
    GcnModel::read(first.as_slice()).unwrap();
    assert!(cmd_train(&TrainArgs { sequences: vec![], ..args }).is_err());

    let out = dir.path().join("out.txt");
    let scorer = format!("gcn:{}", s(&model));
    let code = propmot(&[
        "track", "--det", s(&a.join("det.txt")), "--emb", s(&a.join("emb.csv")), "--config", s(&config),
        "--scorer", &scorer, "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    assert!(!parse_tracking_output(fs::read(&out).unwrap().as_slice()).unwrap().is_empty());
}

#[test]
fn binary_embeddings_and_ablation_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let spec_path = dir.path().join("scene.toml");
    fs::write(&spec_path, small_spec(7).to_toml()).unwrap();
    let seq = dir.path().join("seq");
    assert_eq!(propmot(&["synth", "--spec", s(&spec_path), "--out", s(&seq), "--binary-embeddings"]), 0);
    assert!(seq.join("emb.bin").exists() && !seq.join("emb.csv").exists());

    let config = write_config(dir.path(), "embedding_dim = 16\n");
    let out = dir.path().join("out.txt");
    let oracle = format!("oracle:{}", s(&seq.join("gt.txt")));
    let (det, emb) = (seq.join("det.txt"), seq.join("emb.bin"));
    let args = ["track", "--det", s(&det), "--emb", s(&emb), "--config", s(&config), "--scorer", &oracle, "--out", s(&out)];
    assert_eq!(propmot(&args), 0);

    let ablate = ["ablate", "--scenario", s(&spec_path), "--config", s(&config), "--param", "I", "--values", "1,2"];
    assert_eq!(propmot(&ablate), 0);
    let bad_value = ["ablate", "--scenario", s(&spec_path), "--config", s(&config), "--param", "K", "--values", "1.5"];
    assert_ne!(propmot(&bad_value), 0);
}
