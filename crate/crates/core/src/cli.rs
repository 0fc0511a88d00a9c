//! Pipeline orchestration behind the `propmot` binary.
//!
//! Each `cmd_*` function is usable on its own; [`run`] parses a command line
//! and dispatches to them.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affinity::AffinityGraph;
use crate::error::{Error, Result};
use crate::inference::{
    assemble_trajectories, deoverlap, drop_short_tracks, interpolate_gaps, rank_proposals, TrackAssignment,
};
use crate::metrics::{evaluate_sequence, MetricsReport};
use crate::model_io::{
    attach_embeddings, load_embeddings, parse_config, parse_detections, parse_ground_truth, parse_tracking_output,
    trajectories_to_boxes, write_embeddings_binary, write_tracking_output, Config, Detection, GroundTruthEntry,
    TrackBox, Trajectory,
};
use crate::preprocess::{build_tracklets, Tracklet};
use crate::proposals::{generate_proposals_with, ProposalSet};
use crate::scoring::{
    accuracy, augment_sample, label_detections, make_sample, train_gcn, write_samples, GcnModel, GcnScorer,
    OracleScorer, ProposalScorer, TrainingReport, TrainingSample,
};
use crate::synth::{generate_scenario, Scenario, ScenarioSpec};

/// Everything one tracking run produces.
#[derive(Debug, Clone)]
pub struct TrackResult {
    pub tracklets: Vec<Tracklet>,
    pub proposals: ProposalSet,
    pub assignment: TrackAssignment,
    pub trajectories: Vec<Trajectory>,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(&'static str, f64)>,
}

/// Runs tracklets, proposals, scoring, de-overlapping, assembly and
/// interpolation on one sequence whose detections carry embeddings.
pub fn track_sequence<S: ProposalScorer + ?Sized>(detections: &[Detection], config: &Config, scorer: &S) -> Result<TrackResult> {
    track_sequence_observed(detections, config, scorer, |_, _| {})
}

/// As [`track_sequence`], reporting each iteration's affinity graph.
pub fn track_sequence_observed<S: ProposalScorer + ?Sized>(
    detections: &[Detection],
    config: &Config,
    scorer: &S,
    mut on_graph: impl FnMut(usize, &AffinityGraph),
) -> Result<TrackResult> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        timings.push((name, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let tracklets = build_tracklets(detections, config);
    lap("preprocess", &mut timings);
    let proposals = generate_proposals_with(&tracklets, config, |it, graph, _| on_graph(it, graph));
    lap("proposals", &mut timings);
    let ranked = rank_proposals(&proposals, &tracklets, scorer)?;
    lap("scoring", &mut timings);
    let assignment = deoverlap(&ranked);
    let mut trajectories = drop_short_tracks(assemble_trajectories(&assignment, &tracklets)?, config.min_track_length);
    if config.interpolate {
        trajectories = trajectories.iter().map(interpolate_gaps).collect();
    }
    lap("inference", &mut timings);
    Ok(TrackResult { tracklets, proposals, assignment, trajectories, timings })
}

/// Reads a detection file and attaches embeddings from its sidecar.
pub fn load_sequence(det_path: &Path, emb_path: &Path, embedding_dim: usize) -> Result<Vec<Detection>> {
    let mut detections = parse_detections(BufReader::new(open(det_path)?))?;
    let table = load_embeddings(open(emb_path)?, embedding_dim)?;
    attach_embeddings(&mut detections, &table)?;
    Ok(detections)
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthEntry>> {
    parse_ground_truth(BufReader::new(open(path)?))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => parse_config(&fs::read_to_string(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?),
        None => Ok(Config::default()),
    }
}

/// Which scorer ranks the proposals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    /// A trained model file.
    Gcn(PathBuf),
    /// Ground-truth purity from an annotation file.
    Oracle(PathBuf),
}

impl std::str::FromStr for ScorerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("gcn", p)) if !p.is_empty() => Ok(Self::Gcn(p.into())),
            Some(("oracle", p)) if !p.is_empty() => Ok(Self::Oracle(p.into())),
            _ => Err(Error::Input(format!("scorer must be gcn:<model> or oracle:<gt>, got {s:?}"))),
        }
    }
}

impl std::fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Gcn(p) => write!(f, "gcn:{}", p.display()),
            Self::Oracle(p) => write!(f, "oracle:{}", p.display()),
        }
    }
}

fn build_scorer(spec: &ScorerSpec, detections: &[Detection], config: &Config) -> Result<Box<dyn ProposalScorer>> {
    Ok(match spec {
        ScorerSpec::Gcn(p) => {
            let model = GcnModel::read(BufReader::new(open(p)?))?;
            if model.embedding_dim != config.embedding_dim {
                return Err(Error::Config(format!(
                    "model expects embedding_dim {} but config has {}",
                    model.embedding_dim, config.embedding_dim
                )));
            }
            Box::new(GcnScorer::new(model, config))
        }
        ScorerSpec::Oracle(p) => Box::new(OracleScorer::new(detections, &load_ground_truth(p)?, config)),
    })
}

/// Deterministic record of a run, written as `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Adds every config key under `config.`.
    pub fn push_config(&mut self, config: &Config) {
        let table = toml::Table::try_from(config).expect("config serializes to a table");
        for (k, v) in table {
            self.push(format!("config.{k}"), v);
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Debug, Clone)]
pub struct TrackArgs {
    pub detections: PathBuf,
    pub embeddings: PathBuf,
    pub config: Option<PathBuf>,
    pub scorer: ScorerSpec,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub dump_proposals: Option<PathBuf>,
    pub dump_graph: Option<PathBuf>,
}

/// Tracks one sequence. Writes the result, `<out>.manifest`, and the
/// per-stage wall-clock times to `<out>.timings`.
pub fn cmd_track(args: &TrackArgs) -> Result<TrackResult> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let detections = load_sequence(&args.detections, &args.embeddings, config.embedding_dim)?;
    let scorer = build_scorer(&args.scorer, &detections, &config)?;

    let mut graphs = String::new();
    let result = track_sequence_observed(&detections, &config, scorer.as_ref(), |it, g| {
        if args.dump_graph.is_some() {
            writeln!(graphs, "# iteration {it}").unwrap();
            let mut buf = Vec::new();
            g.write_edge_list(&mut buf).expect("in-memory write");
            graphs.push_str(&String::from_utf8(buf).expect("utf-8 edge list"));
        }
    })?;

    let mut out = Vec::new();
    write_tracking_output(&result.trajectories, &mut out)?;
    fs::write(&args.out, out)?;
    if let Some(p) = &args.dump_proposals {
        let mut buf = Vec::new();
        result.proposals.write_dump(&mut buf)?;
        fs::write(p, buf)?;
    }
    if let Some(p) = &args.dump_graph {
        fs::write(p, graphs)?;
    }

    let mut m = RunManifest::default();
    m.push("command", "track");
    m.push("detections", args.detections.display());
    m.push("embeddings", args.embeddings.display());
    m.push("config_file", args.config.as_ref().map_or("-".to_string(), |p| p.display().to_string()));
    m.push("scorer", &args.scorer);
    m.push("seed", config.seed);
    m.push("num_detections", detections.len());
    m.push("num_tracklets", result.tracklets.len());
    m.push("num_proposals", result.proposals.len());
    for s in &result.proposals.iterations {
        m.push(format!("iteration.{}.vertices", s.iteration), s.vertices);
        m.push(format!("iteration.{}.edges", s.iteration), s.edges);
        m.push(format!("iteration.{}.merged_clusters", s.iteration), s.merged_clusters);
        m.push(format!("iteration.{}.new_proposals", s.iteration), s.new_proposals);
    }
    m.push("num_tracks", result.trajectories.len());
    m.push_config(&config);
    fs::write(sidecar(&args.out, "manifest"), m.render())?;

    let mut t = String::new();
    for (stage, secs) in &result.timings {
        writeln!(t, "{stage}={secs:.6}").unwrap();
    }
    fs::write(sidecar(&args.out, "timings"), t)?;
    Ok(result)
}

/// A training sequence directory holding `det.txt`, `emb.csv` (or `emb.bin`) and `gt.txt`.
#[derive(Debug, Clone)]
pub struct SequenceData {
    pub name: String,
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<GroundTruthEntry>,
}

impl SequenceData {
    pub fn from_scenario(name: impl Into<String>, scenario: &Scenario) -> Self {
        Self { name: name.into(), detections: scenario.detections.clone(), ground_truth: scenario.ground_truth.clone() }
    }
}

pub fn load_sequence_dir(dir: &Path, embedding_dim: usize) -> Result<SequenceData> {
    let emb = if dir.join("emb.bin").exists() { dir.join("emb.bin") } else { dir.join("emb.csv") };
    Ok(SequenceData {
        name: dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned()),
        detections: load_sequence(&dir.join("det.txt"), &emb, embedding_dim)?,
        ground_truth: load_ground_truth(&dir.join("gt.txt"))?,
    })
}

/// Labeled samples from one sequence: every proposal once, plus
/// `augment_copies` augmented versions of each.
pub fn sequence_samples(seq: &SequenceData, config: &Config, rng: &mut ChaCha8Rng) -> Vec<TrainingSample> {
    let tracklets = build_tracklets(&seq.detections, config);
    let proposals = generate_proposals_with(&tracklets, config, |_, _, _| {});
    let labels = label_detections(&seq.detections, &seq.ground_truth);
    let mut out = Vec::new();
    for p in &proposals.proposals {
        let members = crate::inference::members(&p.base_tracklets, &tracklets);
        out.push(make_sample(&members, &labels, config));
        for _ in 0..config.augment_copies {
            if let Some(s) = augment_sample(&members, &labels, config.drop_probability, rng, config) {
                out.push(s);
            }
        }
    }
    for members in random_groups(&tracklets, config, rng) {
        out.push(make_sample(&members, &labels, config));
    }
    out
}

/// Draws `config.random_groups` groups of 2 to `max_cluster_size` tracklets.
/// Members never share a frame and each one starts within `gate_time` frames
/// of the group's current end, so the groups look like plausible proposals.
pub fn random_groups<'a>(tracklets: &'a [Tracklet], config: &Config, rng: &mut ChaCha8Rng) -> Vec<Vec<&'a Tracklet>> {
    let mut out = Vec::new();
    if tracklets.len() < 2 || config.max_cluster_size < 2 {
        return out;
    }
    for _ in 0..config.random_groups {
        let size = rng.random_range(2..=config.max_cluster_size);
        let mut group = vec![&tracklets[rng.random_range(0..tracklets.len())]];
        while group.len() < size {
            let end = group.iter().map(|t| t.end_frame()).max().unwrap_or(0);
            let next: Vec<&Tracklet> = tracklets
                .iter()
                .filter(|t| t.start_frame() > end && f64::from(t.start_frame() - end) <= config.gate_time)
                .collect();
            match next.choose(rng) {
                Some(t) => group.push(t),
                None => break,
            }
        }
        if group.len() >= 2 {
            out.push(group);
        }
    }
    out
}

/// Scene template of the synthetic purity corpus: ten identities over 150
/// frames, each hidden three times at random.
pub fn corpus_scenario(seed: u64, embedding_dim: usize) -> ScenarioSpec {
    ScenarioSpec {
        num_identities: 10,
        frames: 150,
        embedding_dim,
        embedding_noise: 0.15,
        box_noise: 2.0,
        jitter: 1.0,
        occlusions: crate::synth::random_occlusions(10, 150, 3, 25, &mut ChaCha8Rng::seed_from_u64(seed)),
        seed,
        ..ScenarioSpec::default()
    }
}

/// Labeled samples from one synthetic scene per seed, balanced.
pub fn synthetic_corpus(
    seeds: std::ops::Range<u64>,
    config: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainingSample>> {
    let mut out = Vec::new();
    for seed in seeds {
        let scenario = generate_scenario(&corpus_scenario(seed, config.embedding_dim))?;
        out.extend(sequence_samples(&SequenceData::from_scenario(format!("scene{seed}"), &scenario), config, rng));
    }
    Ok(balance_samples(out, rng))
}

/// Undersamples the larger class so both classes are equally frequent.
pub fn balance_samples(samples: Vec<TrainingSample>, rng: &mut ChaCha8Rng) -> Vec<TrainingSample> {
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = samples.into_iter().partition(|s| s.label >= 0.5);
    if pos.is_empty() || neg.is_empty() {
        return pos.into_iter().chain(neg).collect();
    }
    let n = pos.len().min(neg.len());
    pos.shuffle(rng);
    neg.shuffle(rng);
    pos.truncate(n);
    neg.truncate(n);
    pos.into_iter().chain(neg).collect()
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub sequences: Vec<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Index of a sequence left out of training and used for evaluation.
    pub holdout: Option<usize>,
    pub dump_samples: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainingReport,
    pub num_samples: usize,
    pub holdout_accuracy: Option<f64>,
}

/// Trains a purity model on labeled sequences; writes the model and `<out>.report`.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainOutcome> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.sequences.is_empty() {
        return Err(Error::Input("no training sequences given".into()));
    }
    if let Some(h) = args.holdout {
        if h >= args.sequences.len() || args.sequences.len() < 2 {
            return Err(Error::Input(format!("holdout index {h} needs at least two sequences and a valid index")));
        }
    }
    let sequences = args
        .sequences
        .iter()
        .map(|p| load_sequence_dir(p, config.embedding_dim))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (k, seq) in sequences.iter().enumerate() {
        let samples = sequence_samples(seq, &config, &mut rng);
        if Some(k) == args.holdout {
            held = samples;
        } else {
            train.extend(samples);
        }
    }
    let train = balance_samples(train, &mut rng);
    if let Some(p) = &args.dump_samples {
        let mut buf = Vec::new();
        write_samples(&train, &mut buf)?;
        fs::write(p, buf)?;
    }
    let report = train_gcn(&train, &config, &mut rng)?;
    let holdout_accuracy = if args.holdout.is_some() { Some(accuracy(&report.model, &held)?) } else { None };

    let mut buf = Vec::new();
    report.model.write(&mut buf)?;
    fs::write(&args.out, buf)?;

    let mut m = RunManifest::default();
    m.push("command", "train");
    for (k, p) in args.sequences.iter().enumerate() {
        m.push(format!("sequence.{k}"), p.display());
    }
    m.push("seed", config.seed);
    m.push("num_samples", train.len());
    m.push("num_pure", train.iter().filter(|s| s.label >= 0.5).count());
    m.push("loss", format!("{:?}", config.loss).to_lowercase());
    m.push("initial_loss", report.initial_loss);
    for (k, l) in report.epoch_losses.iter().enumerate() {
        m.push(format!("epoch.{}.loss", k + 1), l);
    }
    m.push("train_accuracy", report.accuracy);
    if let (Some(h), Some(a)) = (args.holdout, holdout_accuracy) {
        m.push("holdout", h);
        m.push("holdout_accuracy", a);
    }
    m.push_config(&config);
    fs::write(sidecar(&args.out, "report"), m.render())?;
    Ok(TrainOutcome { num_samples: train.len(), report, holdout_accuracy })
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    /// `(ground truth, result)` pairs, one per sequence.
    pub pairs: Vec<(PathBuf, PathBuf)>,
    pub out: Option<PathBuf>,
}

/// Scores result files against ground truth; optionally writes the key-value report.
pub fn cmd_eval(args: &EvalArgs) -> Result<MetricsReport> {
    if args.pairs.is_empty() {
        return Err(Error::Input("nothing to evaluate".into()));
    }
    let mut seqs = Vec::new();
    for (gt_path, res_path) in &args.pairs {
        let gt: Vec<TrackBox> = load_ground_truth(gt_path)?.iter().map(TrackBox::from).collect();
        let pred = parse_tracking_output(BufReader::new(open(res_path)?))?;
        let name = res_path.file_stem().map_or_else(|| res_path.display().to_string(), |s| s.to_string_lossy().into_owned());
        seqs.push((name, evaluate_sequence(&gt, &pred)?));
    }
    let report = MetricsReport::from_sequences(seqs)?;
    if let Some(p) = &args.out {
        fs::write(p, report.to_key_values())?;
    }
    Ok(report)
}

/// Parameter swept by [`cmd_ablate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationParam {
    /// Proposal-generation iterations.
    #[value(name = "I")]
    Iterations,
    /// Largest accepted cluster.
    #[value(name = "s_max")]
    MaxClusterSize,
    /// Clustering threshold step.
    #[value(name = "delta")]
    ThresholdStep,
    /// Neighbors kept per vertex.
    #[value(name = "K")]
    MaxNeighbors,
}

impl AblationParam {
    pub fn apply(self, config: &Config, value: f64) -> Result<Config> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{self:?} needs a positive integer, got {value}")))
            }
        };
        let mut c = config.clone();
        match self {
            Self::Iterations => c.max_iterations = count()?,
            Self::MaxClusterSize => c.max_cluster_size = count()?,
            Self::ThresholdStep => c.threshold_step = value,
            Self::MaxNeighbors => c.max_neighbors = count()?,
        }
        c.validate()?;
        Ok(c)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Iterations => "I",
            Self::MaxClusterSize => "s_max",
            Self::ThresholdStep => "delta",
            Self::MaxNeighbors => "K",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub value: f64,
    pub mota: f64,
    pub idf1: f64,
}

/// Tracks every scenario once per value and pools the metrics per value.
/// Without a model the ground-truth oracle scores proposals.
pub fn ablate(
    scenarios: &[Scenario],
    param: AblationParam,
    values: &[f64],
    config: &Config,
    model: Option<&GcnModel>,
) -> Result<Vec<AblationRow>> {
    values
        .iter()
        .map(|&value| {
            let c = param.apply(config, value)?;
            let mut seqs = Vec::new();
            for (k, s) in scenarios.iter().enumerate() {
                let scorer: Box<dyn ProposalScorer> = match model {
                    Some(m) => Box::new(GcnScorer::new(m.clone(), &c)),
                    None => Box::new(OracleScorer::new(&s.detections, &s.ground_truth, &c)),
                };
                let result = track_sequence(&s.detections, &c, scorer.as_ref())?;
                let gt: Vec<TrackBox> = s.ground_truth.iter().map(TrackBox::from).collect();
                seqs.push((format!("seq{k}"), evaluate_sequence(&gt, &trajectories_to_boxes(&result.trajectories))?));
            }
            let r = MetricsReport::from_sequences(seqs)?;
            Ok(AblationRow { value, mota: r.mota, idf1: r.idf1 })
        })
        .collect()
}

pub fn format_ablation(param: AblationParam, rows: &[AblationRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{:>8} {:>8} {:>8}", param.label(), "MOTA", "IDF1").unwrap();
    for r in rows {
        writeln!(s, "{:>8} {:>8.4} {:>8.4}", r.value, r.mota, r.idf1).unwrap();
    }
    s
}

#[derive(Debug, Clone)]
pub struct AblateArgs {
    pub scenario: PathBuf,
    pub param: AblationParam,
    pub values: Vec<f64>,
    pub config: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<Vec<AblationRow>> {
    if args.values.is_empty() {
        return Err(Error::Input("no values to sweep".into()));
    }
    let config = load_config(args.config.as_deref())?;
    let spec = ScenarioSpec::from_toml(&fs::read_to_string(&args.scenario)?)?;
    if spec.embedding_dim != config.embedding_dim {
        return Err(Error::Config(format!(
            "scenario embedding_dim {} differs from config embedding_dim {}",
            spec.embedding_dim, config.embedding_dim
        )));
    }
    let scenario = generate_scenario(&spec)?;
    let model = match &args.model {
        Some(p) => Some(GcnModel::read(BufReader::new(open(p)?))?),
        None => None,
    };
    ablate(&[scenario], args.param, &args.values, &config, model.as_ref())
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub spec: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub binary_embeddings: bool,
}

/// Writes a synthetic sequence directory.
pub fn cmd_synth(args: &SynthArgs) -> Result<Scenario> {
    let mut spec = match &args.spec {
        Some(p) => ScenarioSpec::from_toml(&fs::read_to_string(p)?)?,
        None => ScenarioSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let scenario = generate_scenario(&spec)?;
    scenario.write_to_dir(&args.out)?;
    if args.binary_embeddings {
        fs::remove_file(args.out.join("emb.csv"))?;
        let mut buf = Vec::new();
        write_embeddings_binary(&scenario.embeddings, spec.embedding_dim, &mut buf)?;
        fs::write(args.out.join("emb.bin"), buf)?;
    }
    fs::write(args.out.join("scenario.toml"), spec.to_toml())?;
    Ok(scenario)
}

#[derive(Debug, Parser)]
#[command(name = "propmot", version, about = "Offline multi-object tracking by proposal generation and scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track one sequence.
    Track {
        #[arg(long)]
        det: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `gcn:<model file>` or `oracle:<ground-truth file>`.
        #[arg(long)]
        scorer: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dump_proposals: Option<PathBuf>,
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Train a purity model on sequence directories (det.txt, emb.csv|emb.bin, gt.txt).
    Train {
        #[arg(required = true)]
        sequences: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Leave this sequence (0-based) out and report accuracy on it.
        #[arg(long)]
        holdout: Option<usize>,
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Evaluate results against ground truth.
    Eval {
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        #[arg(long, required = true)]
        result: Vec<PathBuf>,
        /// Also write a key-value report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter on a synthetic scenario.
    Ablate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        param: AblationParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Score with this model instead of the ground-truth oracle.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Generate a synthetic sequence directory.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        binary_embeddings: bool,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track { det, emb, config, scorer, out, seed, dump_proposals, dump_graph } => {
            let args = TrackArgs { detections: det, embeddings: emb, config, scorer: scorer.parse()?, out, seed, dump_proposals, dump_graph };
            let r = cmd_track(&args)?;
            println!("{} tracklets, {} proposals, {} tracks", r.tracklets.len(), r.proposals.len(), r.trajectories.len());
        }
        Command::Train { sequences, config, out, seed, holdout, dump_samples } => {
            let o = cmd_train(&TrainArgs { sequences, config, out, seed, holdout, dump_samples })?;
            println!(
                "{} samples, loss {:.4} -> {:.4}, train accuracy {:.4}",
                o.num_samples,
                o.report.initial_loss,
                o.report.final_loss(),
                o.report.accuracy
            );
            if let Some(a) = o.holdout_accuracy {
                println!("holdout accuracy {a:.4}");
            }
        }
        Command::Eval { gt, result, out } => {
            if gt.len() != result.len() {
                return Err(Error::Input("--gt and --result must be given the same number of times".into()));
            }
            let report = cmd_eval(&EvalArgs { pairs: gt.into_iter().zip(result).collect(), out })?;
            print!("{}", report.to_table());
        }
        Command::Ablate { scenario, param, values, config, model } => {
            let rows = cmd_ablate(&AblateArgs { scenario, param, values, config, model })?;
            print!("{}", format_ablation(param, &rows));
        }
        Command::Synth { spec, out, seed, binary_embeddings } => {
            let s = cmd_synth(&SynthArgs { spec, out: out.clone(), seed, binary_embeddings })?;
            println!("{} detections, {} ground-truth boxes written to {}", s.detections.len(), s.ground_truth.len(), out.display());
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
