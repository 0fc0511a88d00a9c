//! Training samples, augmentation, and the minibatch training loop.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model_io::Config;
use crate::preprocess::Tracklet;
use crate::scoring::adam::{adam_step, AdamState};
use crate::scoring::features::GcnInput;
use crate::scoring::gcn::{write_matrix_rows, GcnGradients, GcnModel, LineReader, Loss};
use crate::scoring::labels::{label_proposal, DetectionLabels};

const SAMPLES_MAGIC: &str = "proposal-mot-samples";
const SAMPLES_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub input: GcnInput,
    /// 1 for pure, 0 for impure.
    pub label: f64,
}

/// Labeled sample for a proposal given by its member tracklets.
pub fn make_sample(members: &[&Tracklet], labels: &DetectionLabels, config: &Config) -> TrainingSample {
    let label = if label_proposal(members, labels).pure { 1.0 } else { 0.0 };
    TrainingSample { input: GcnInput::from_members(members, config), label }
}

/// Drops each detection with probability `p_drop` and rebuilds the sample.
/// Returns `None` when nothing survives.
pub fn augment_sample<R: Rng + ?Sized>(
    members: &[&Tracklet],
    labels: &DetectionLabels,
    p_drop: f64,
    rng: &mut R,
    config: &Config,
) -> Option<TrainingSample> {
    let survivors = drop_detections(members, p_drop, rng);
    if survivors.is_empty() {
        return None;
    }
    let refs: Vec<&Tracklet> = survivors.iter().collect();
    Some(make_sample(&refs, labels, config))
}

/// Member tracklets after random detection removal; emptied tracklets vanish.
pub fn drop_detections<R: Rng + ?Sized>(members: &[&Tracklet], p_drop: f64, rng: &mut R) -> Vec<Tracklet> {
    let mut out = Vec::with_capacity(members.len());
    for t in members {
        let kept: Vec<_> = t.detections.iter().filter(|_| !rng.random_bool(p_drop)).cloned().collect();
        if !kept.is_empty() {
            out.push(Tracklet::new(t.tracklet_id, kept));
        }
    }
    out
}

/// Share of samples whose thresholded prediction matches the label.
pub fn accuracy(model: &GcnModel, samples: &[TrainingSample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let correct = samples
        .par_iter()
        .map(|s| model.forward(&s.input).map(|p| ((p >= 0.5) == (s.label >= 0.5)) as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(correct.iter().sum::<usize>() as f64 / samples.len() as f64)
}

/// Mean loss over `samples`.
pub fn mean_loss(model: &GcnModel, samples: &[TrainingSample], loss: Loss) -> Result<f64> {
    let values = samples
        .par_iter()
        .map(|s| model.gradients(&s.input, s.label, loss).map(|(l, _)| l))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.iter().sum::<f64>() / samples.len().max(1) as f64)
}

#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub model: GcnModel,
    /// Mean loss of the initialized model.
    pub initial_loss: f64,
    /// Mean minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Training-set accuracy of the final model.
    pub accuracy: f64,
}

impl TrainingReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(self.initial_loss)
    }
}

/// Trains a freshly initialized model with Adam over shuffled minibatches.
/// One training iteration is one pass over all samples.
pub fn train_gcn<R: Rng + ?Sized>(samples: &[TrainingSample], config: &Config, rng: &mut R) -> Result<TrainingReport> {
    if samples.is_empty() {
        return Err(Error::Input("no training samples".into()));
    }
    let mut model = GcnModel::from_config(config, rng);
    let width = model.layers[0].nrows();
    if let Some(s) = samples.iter().find(|s| s.input.features.ncols() != width) {
        return Err(Error::Shape(format!(
            "sample feature width {} but embedding_dim {} expects {width}",
            s.input.features.ncols(),
            config.embedding_dim
        )));
    }
    let positives = samples.iter().filter(|s| s.label >= 0.5).count();
    if positives == 0 || positives == samples.len() {
        log::warn!("training set contains a single class ({positives} pure of {})", samples.len());
    }

    let initial_loss = mean_loss(&model, samples, config.loss)?;
    let mut state = AdamState::for_model(&model);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.training_iterations);
    for epoch in 0..config.training_iterations {
        order.shuffle(rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map(|&k| model.gradients(&samples[k].input, samples[k].label, config.loss))
                .collect::<Result<Vec<_>>>()?;
            // sequential sum keeps the reduction order fixed
            let mut grads = GcnGradients::zeros_like(&model);
            for (l, g) in &results {
                total += l;
                grads.add_assign(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut model, &grads, &mut state, config);
        }
        let mean = total / samples.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        epoch_losses.push(mean);
    }
    let accuracy = accuracy(&model, samples)?;
    Ok(TrainingReport { model, initial_loss, epoch_losses, accuracy })
}

/// Writes samples in the model-file container.
pub fn write_samples<W: Write>(samples: &[TrainingSample], mut out: W) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "{SAMPLES_MAGIC} {SAMPLES_VERSION}").unwrap();
    writeln!(s, "count {}", samples.len()).unwrap();
    for sample in samples {
        let f = &sample.input.features;
        writeln!(s, "sample {} {} {}", sample.label, f.nrows(), f.ncols()).unwrap();
        write_matrix_rows(&mut s, f);
        write_matrix_rows(&mut s, &sample.input.affinity);
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_samples<R: BufRead>(reader: R) -> Result<Vec<TrainingSample>> {
    let mut lines = LineReader::new(reader)?;
    let header = lines.next_tokens()?;
    if header != [SAMPLES_MAGIC.to_string(), SAMPLES_VERSION.to_string()] {
        return Err(Error::Model("not a training-sample file".into()));
    }
    let count = lines.keyed_usize("count")?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let head = lines.next_tokens()?;
        if head.len() != 4 || head[0] != "sample" {
            return Err(Error::Model("expected `sample <label> <rows> <cols>`".into()));
        }
        let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::Model(format!("bad size {t:?}")));
        let label: f64 = head[1].parse().map_err(|_| Error::Model("bad label".into()))?;
        let (rows, cols) = (parse(&head[2])?, parse(&head[3])?);
        let features = lines.matrix(rows, cols)?;
        let affinity = lines.matrix(rows, rows)?;
        out.push(TrainingSample { input: GcnInput { features, affinity }, label });
    }
    Ok(out)
}
