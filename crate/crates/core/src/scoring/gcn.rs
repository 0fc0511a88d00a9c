//! Graph-convolutional purity classifier.
//!
//! Each layer computes `F' = ReLU(D^-1 (A + I) F W)` with `D` the row sums of
//! `A + I`. The top layer is max-pooled over vertices and fed to a linear
//! classifier with a logistic output.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_io::Config;
use crate::scoring::features::{GcnInput, ST_DIM};

const MODEL_MAGIC: &str = "proposal-mot-gcn";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    /// Embedding width `D`; the input width is `D + 5`.
    pub embedding_dim: usize,
    /// `W_l`, each `width_in x width_out`.
    pub layers: Vec<DMatrix<f64>>,
    pub classifier: DVector<f64>,
    pub bias: f64,
}

/// Training objective on the output probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// `-[y ln p + (1 - y) ln(1 - p)]`
    Bce,
    /// `(p - y)^2`
    Mse,
}

/// Gradient of the loss with respect to every model weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnGradients {
    pub layers: Vec<DMatrix<f64>>,
    pub classifier: DVector<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss and its derivative with respect to the logit.
pub fn loss_from_logit(z: f64, y: f64, kind: Loss) -> (f64, f64) {
    let p = sigmoid(z);
    match kind {
        // log-sum-exp form avoids ln(0)
        Loss::Bce => (z.max(0.0) - z * y + (-z.abs()).exp().ln_1p(), p - y),
        Loss::Mse => ((p - y).powi(2), 2.0 * (p - y) * p * (1.0 - p)),
    }
}

/// `D^-1 (A + I)` with `D` the row sums of `A + I`.
pub fn normalized_adjacency(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a + DMatrix::identity(n, n);
    for r in 0..n {
        let s: f64 = m.row(r).sum();
        m.row_mut(r).unscale_mut(s);
    }
    m
}

struct Trace {
    adjacency: DMatrix<f64>,
    /// `D^-1 (A + I) F_l`, one per layer.
    propagated: Vec<DMatrix<f64>>,
    /// Pre-activations `Z_l`.
    pre: Vec<DMatrix<f64>>,
    pooled: DVector<f64>,
    argmax: Vec<usize>,
    logit: f64,
}

impl GcnModel {
    /// Kaiming-uniform initialization, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`.
    pub fn new<R: Rng + ?Sized>(embedding_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        assert!(!hidden.is_empty(), "at least one GCN layer");
        let mut widths = vec![embedding_dim + ST_DIM];
        widths.extend_from_slice(hidden);
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt();
                DMatrix::from_fn(w[0], w[1], |_, _| rng.random_range(-bound..bound))
            })
            .collect();
        let last = *hidden.last().unwrap();
        let bound = (6.0 / last as f64).sqrt();
        let classifier = DVector::from_fn(last, |_, _| rng.random_range(-bound..bound));
        Self { embedding_dim, layers, classifier, bias: 0.0 }
    }

    pub fn from_config<R: Rng + ?Sized>(config: &Config, rng: &mut R) -> Self {
        Self::new(config.embedding_dim, &config.gcn_hidden, rng)
    }

    /// Layer widths from input to the pooled feature.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].nrows()];
        w.extend(self.layers.iter().map(|l| l.ncols()));
        w
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum::<usize>() + self.classifier.len() + 1
    }

    fn check_input(&self, features: &DMatrix<f64>, affinity: &DMatrix<f64>) -> Result<()> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Shape("proposal has no vertices".into()));
        }
        if features.ncols() != self.layers[0].nrows() {
            return Err(Error::Shape(format!(
                "feature width {} but model expects {}",
                features.ncols(),
                self.layers[0].nrows()
            )));
        }
        if affinity.nrows() != n || affinity.ncols() != n {
            return Err(Error::Shape(format!(
                "affinity is {}x{} for {n} vertices",
                affinity.nrows(),
                affinity.ncols()
            )));
        }
        Ok(())
    }

    fn trace(&self, features: &DMatrix<f64>, affinity: &DMatrix<f64>) -> Result<Trace> {
        self.check_input(features, affinity)?;
        let adjacency = normalized_adjacency(affinity);
        let mut propagated = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut current = features.clone();
        for w in &self.layers {
            let p = &adjacency * &current;
            let z = &p * w;
            current = z.map(|x| x.max(0.0));
            propagated.push(p);
            pre.push(z);
        }
        let cols = current.ncols();
        let mut pooled = DVector::zeros(cols);
        let mut argmax = vec![0; cols];
        for c in 0..cols {
            let (mut best_r, mut best) = (0, current[(0, c)]);
            for r in 1..current.nrows() {
                if current[(r, c)] > best {
                    best = current[(r, c)];
                    best_r = r;
                }
            }
            pooled[c] = best;
            argmax[c] = best_r;
        }
        let logit = self.classifier.dot(&pooled) + self.bias;
        Ok(Trace { adjacency, propagated, pre, pooled, argmax, logit })
    }

    /// Classifier logit for one proposal.
    pub fn logit(&self, input: &GcnInput) -> Result<f64> {
        Ok(self.trace(&input.features, &input.affinity)?.logit)
    }

    /// Probability that the proposal is pure. Saturates strictly inside `(0, 1)`.
    pub fn forward(&self, input: &GcnInput) -> Result<f64> {
        gcn_forward(self, &input.features, &input.affinity)
    }

    /// Loss at `(input, label)` and its exact gradient.
    pub fn gradients(&self, input: &GcnInput, label: f64, loss: Loss) -> Result<(f64, GcnGradients)> {
        let t = self.trace(&input.features, &input.affinity)?;
        let (value, dlogit) = loss_from_logit(t.logit, label, loss);

        let classifier = t.pooled.scale(dlogit);
        let dpooled = self.classifier.scale(dlogit);
        let last = t.pre.last().unwrap();
        let mut dfeat = DMatrix::zeros(last.nrows(), last.ncols());
        for (c, &r) in t.argmax.iter().enumerate() {
            dfeat[(r, c)] = dpooled[c];
        }
        let mut layers = vec![DMatrix::zeros(0, 0); self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let dz = dfeat.zip_map(&t.pre[l], |g, z| if z > 0.0 { g } else { 0.0 });
            layers[l] = t.propagated[l].transpose() * &dz;
            if l > 0 {
                dfeat = t.adjacency.transpose() * (dz * self.layers[l].transpose());
            }
        }
        Ok((value, GcnGradients { layers, classifier, bias: dlogit }))
    }

    /// All weights in a fixed order: layers (row-major), classifier, bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for l in &self.layers {
            for r in 0..l.nrows() {
                out.extend(l.row(r).iter());
            }
        }
        out.extend(self.classifier.iter());
        out.push(self.bias);
        out
    }

    /// Inverse of [`GcnModel::flatten`].
    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_parameters(), "parameter count");
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for r in 0..l.nrows() {
                for c in 0..l.ncols() {
                    l[(r, c)] = it.next().unwrap();
                }
            }
        }
        for x in self.classifier.iter_mut() {
            *x = it.next().unwrap();
        }
        self.bias = it.next().unwrap();
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}").unwrap();
        writeln!(s, "embedding_dim {}", self.embedding_dim).unwrap();
        let widths: Vec<String> = self.widths().iter().map(|w| w.to_string()).collect();
        writeln!(s, "widths {}", widths.join(" ")).unwrap();
        for (k, l) in self.layers.iter().enumerate() {
            writeln!(s, "layer {k} {} {}", l.nrows(), l.ncols()).unwrap();
            write_matrix_rows(&mut s, l);
        }
        writeln!(s, "classifier {}", self.classifier.len()).unwrap();
        writeln!(s, "{}", join_row(self.classifier.iter())).unwrap();
        writeln!(s, "bias {}", self.bias).unwrap();
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = LineReader::new(reader)?;
        let header = lines.next_tokens()?;
        if header.len() != 2 || header[0] != MODEL_MAGIC {
            return Err(Error::Model("not a GCN model file".into()));
        }
        if header[1] != MODEL_VERSION.to_string() {
            return Err(Error::Model(format!("unsupported model version {}", header[1])));
        }
        let embedding_dim = lines.keyed_usize("embedding_dim")?;
        let widths_line = lines.next_tokens()?;
        if widths_line.first().map(String::as_str) != Some("widths") || widths_line.len() < 3 {
            return Err(Error::Model("expected widths line".into()));
        }
        let widths: Vec<usize> = widths_line[1..].iter().map(|t| parse_num(t)).collect::<Result<_>>()?;
        if widths[0] != embedding_dim + ST_DIM {
            return Err(Error::Model("input width does not match embedding_dim + 5".into()));
        }
        let mut layers = Vec::new();
        for k in 0..widths.len() - 1 {
            let head = lines.next_tokens()?;
            let expect = vec!["layer".to_string(), k.to_string(), widths[k].to_string(), widths[k + 1].to_string()];
            if head != expect {
                return Err(Error::Model(format!("expected `{}`", expect.join(" "))));
            }
            layers.push(lines.matrix(widths[k], widths[k + 1])?);
        }
        let n = lines.keyed_usize("classifier")?;
        if n != *widths.last().unwrap() {
            return Err(Error::Model("classifier width mismatch".into()));
        }
        let classifier = DVector::from_vec(lines.row(n)?);
        let bias_line = lines.next_tokens()?;
        if bias_line.len() != 2 || bias_line[0] != "bias" {
            return Err(Error::Model("expected bias line".into()));
        }
        let bias = parse_num(&bias_line[1])?;
        Ok(Self { embedding_dim, layers, classifier, bias })
    }
}

/// Purity probability of one proposal graph.
pub fn gcn_forward(model: &GcnModel, features: &DMatrix<f64>, affinity: &DMatrix<f64>) -> Result<f64> {
    let z = model.trace(features, affinity)?.logit;
    Ok(sigmoid(z).clamp(f64::EPSILON, 1.0 - f64::EPSILON))
}

/// Loss gradient for one labeled proposal.
pub fn gcn_gradients(model: &GcnModel, input: &GcnInput, label: f64, loss: Loss) -> Result<GcnGradients> {
    Ok(model.gradients(input, label, loss)?.1)
}

impl GcnGradients {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Self {
            layers: model.layers.iter().map(|l| DMatrix::zeros(l.nrows(), l.ncols())).collect(),
            classifier: DVector::zeros(model.classifier.len()),
            bias: 0.0,
        }
    }

    pub fn add_assign(&mut self, other: &GcnGradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            *a += b;
        }
        self.classifier += &other.classifier;
        self.bias += other.bias;
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            *l *= k;
        }
        self.classifier *= k;
        self.bias *= k;
    }

    /// Same order as [`GcnModel::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            for r in 0..l.nrows() {
                out.extend(l.row(r).iter());
            }
        }
        out.extend(self.classifier.iter());
        out.push(self.bias);
        out
    }
}

pub(crate) fn join_row<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub(crate) fn write_matrix_rows(s: &mut String, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        writeln!(s, "{}", join_row(m.row(r).iter())).unwrap();
    }
}

fn parse_num<T: std::str::FromStr>(t: &str) -> Result<T> {
    t.parse().map_err(|_| Error::Model(format!("bad number {t:?}")))
}

/// Token-oriented reader shared by the model and sample containers.
pub(crate) struct LineReader {
    lines: std::vec::IntoIter<String>,
}

impl LineReader {
    pub(crate) fn new<R: BufRead>(reader: R) -> Result<Self> {
        let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
        Ok(Self { lines: lines.into_iter() })
    }

    pub(crate) fn next_tokens(&mut self) -> Result<Vec<String>> {
        let line = self.lines.next().ok_or_else(|| Error::Model("unexpected end of file".into()))?;
        Ok(line.split_whitespace().map(str::to_string).collect())
    }

    pub(crate) fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let t = self.next_tokens()?;
        if t.len() != 2 || t[0] != key {
            return Err(Error::Model(format!("expected `{key} <n>`")));
        }
        parse_num(&t[1])
    }

    pub(crate) fn row(&mut self, n: usize) -> Result<Vec<f64>> {
        let t = self.next_tokens()?;
        if t.len() != n {
            return Err(Error::Model(format!("expected {n} values, found {}", t.len())));
        }
        t.iter().map(|x| parse_num(x)).collect()
    }

    pub(crate) fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}
