//! Variational classifier trained directly on the hinge loss.
//!
//! The score of a sample is `⟨Z_0⟩` after the embedding and the layered
//! ansatz, plus a trainable bias. Circuit gradients come from the
//! parameter-shift rule; the bias gradient is the hinge subgradient.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{expectation, param_shift_gradient, Observable};
use crate::circuits::{variational_tape, AnsatzSpec, EmbeddingSpec};
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::metrics::accuracy;
use crate::report::fmt_f64;
use crate::svm::sign_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batch {
    #[default]
    Full,
    Size(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub layers: usize,
    pub batch: Batch,
    pub seed: u64,
    /// θ starts uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 60,
            layers: 2,
            batch: Batch::Full,
            seed: 42,
            init_scale: 0.01,
        }
    }
}

impl FitConfig {
    /// Defaults for the variational classifier. Starting near θ = 0 puts it
    /// close to a saddle of the hinge loss, so it needs a larger step than
    /// the hybrid model to leave it within 60 epochs.
    pub fn for_qv() -> Self {
        Self {
            learning_rate: 1.0,
            ..Self::default()
        }
    }

    /// Defaults for the hybrid classifier; same as [`FitConfig::default`].
    pub fn for_qvk() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::config(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.layers == 0 {
            return Err(Error::config("at least one ansatz layer is required"));
        }
        if self.batch == Batch::Size(0) {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::config("init scale must be >= 0"));
        }
        Ok(())
    }

    pub(crate) fn init_theta(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let s = self.init_scale;
        (0..n).map(|_| rng.random_range(-s..=s)).collect()
    }

    /// Index batches for one epoch.
    pub(crate) fn batches(&self, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
        match self.batch {
            Batch::Size(k) if k < m => {
                let mut order: Vec<usize> = (0..m).collect();
                order.shuffle(rng);
                order.chunks(k).map(<[usize]>::to_vec).collect()
            }
            _ => vec![(0..m).collect()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// One record per completed epoch, measured after that epoch's update.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
}

pub const TRACE_HEADER: &str = "epoch,train_loss,test_loss,train_acc,test_acc";

impl TrainingTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch,
                fmt_f64(r.train_loss),
                fmt_f64(r.test_loss),
                fmt_f64(r.train_acc),
                fmt_f64(r.test_acc)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    /// Flattened `(layers, qubits, 3)` angle tensor.
    pub theta: Vec<f64>,
    pub bias: f64,
    pub embedding: EmbeddingSpec,
    pub ansatz: AnsatzSpec,
}

impl VarModel {
    pub fn new(
        embedding: EmbeddingSpec,
        ansatz: AnsatzSpec,
        theta: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        if embedding.n_features != ansatz.n_qubits {
            return Err(Error::config(format!(
                "embedding uses {} qubits but the ansatz has {}",
                embedding.n_features, ansatz.n_qubits
            )));
        }
        ansatz.check_theta(&theta)?;
        Ok(Self {
            theta,
            bias,
            embedding,
            ansatz,
        })
    }

    /// `θ[layer][qubit][angle]`.
    pub fn angle(&self, layer: usize, qubit: usize, angle: usize) -> f64 {
        self.theta[self.ansatz.slot(layer, qubit, angle)]
    }

    fn circuit_score(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let tape = variational_tape(x, &self.embedding, &self.ansatz)?;
        expectation(&tape, theta, Observable::PauliZ(0))
    }

    pub fn scores(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| qv_score(self, x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(sign_label(qv_score(self, x)?))
    }
}

/// `⟨Z_0⟩ + b`.
pub fn qv_score(model: &VarModel, x: &[f64]) -> Result<f64> {
    Ok(model.circuit_score(x, &model.theta)? + model.bias)
}

/// `max(0, 1 - y·score)`.
pub fn hinge_loss(y: i8, score: f64) -> Result<f64> {
    if y != 1 && y != -1 {
        return Err(Error::data(format!("label {y} is not +1 or -1")));
    }
    Ok((1.0 - f64::from(y) * score).max(0.0))
}

pub(crate) fn mean_hinge(labels: &[i8], scores: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::data("loss needs at least one sample"));
    }
    let mut total = 0.0;
    for (&y, &s) in labels.iter().zip(scores) {
        total += hinge_loss(y, s)?;
    }
    Ok(total / labels.len() as f64)
}

/// Mean hinge loss over a sample set.
pub fn qv_cost(model: &VarModel, xs: &[Vec<f64>], labels: &[i8]) -> Result<f64> {
    check_set(xs, labels)?;
    mean_hinge(labels, &model.scores(xs)?)
}

/// Gradient of [`qv_cost`] with respect to `(θ, b)`. Samples with
/// `y·score >= 1` contribute nothing.
pub fn qv_cost_gradient(
    model: &VarModel,
    xs: &[Vec<f64>],
    labels: &[i8],
) -> Result<(Vec<f64>, f64)> {
    check_set(xs, labels)?;
    let idx: Vec<usize> = (0..xs.len()).collect();
    gradient_on(model, xs, labels, &idx)
}

fn gradient_on(
    model: &VarModel,
    xs: &[Vec<f64>],
    labels: &[i8],
    batch: &[usize],
) -> Result<(Vec<f64>, f64)> {
    let per_sample: Vec<Option<Vec<f64>>> = batch
        .par_iter()
        .map(|&i| {
            let y = f64::from(labels[i]);
            let tape = variational_tape(&xs[i], &model.embedding, &model.ansatz)?;
            let score = expectation(&tape, &model.theta, Observable::PauliZ(0))? + model.bias;
            if 1.0 - y * score <= 0.0 {
                return Ok(None);
            }
            param_shift_gradient(&tape, &model.theta, Observable::PauliZ(0)).map(Some)
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut grad_theta = vec![0.0; model.theta.len()];
    let mut grad_bias = 0.0;
    for (&i, g) in batch.iter().zip(&per_sample) {
        if let Some(g) = g {
            let y = f64::from(labels[i]);
            for (acc, v) in grad_theta.iter_mut().zip(g) {
                *acc -= scale * y * v;
            }
            grad_bias -= scale * y;
        }
    }
    Ok((grad_theta, grad_bias))
}

pub(crate) fn check_set(xs: &[Vec<f64>], labels: &[i8]) -> Result<()> {
    if xs.len() != labels.len() {
        return Err(Error::data(format!(
            "{} samples but {} labels",
            xs.len(),
            labels.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::data("sample set is empty"));
    }
    crate::svm::check_labels(labels)
}

pub(crate) fn check_sets(train: &LabeledSet, test: &LabeledSet) -> Result<()> {
    check_set(&train.features, &train.labels)?;
    check_set(&test.features, &test.labels)?;
    if test.n_features() != train.n_features() {
        return Err(Error::data("train and test sets differ in feature count"));
    }
    Ok(())
}

pub(crate) fn epoch_record(
    epoch: usize,
    train: &LabeledSet,
    train_scores: &[f64],
    test: &LabeledSet,
    test_scores: &[f64],
) -> Result<EpochRecord> {
    let preds = |s: &[f64]| s.iter().map(|&v| sign_label(v)).collect::<Vec<_>>();
    Ok(EpochRecord {
        epoch,
        train_loss: mean_hinge(&train.labels, train_scores)?,
        test_loss: mean_hinge(&test.labels, test_scores)?,
        train_acc: accuracy(&train.labels, &preds(train_scores)),
        test_acc: accuracy(&test.labels, &preds(test_scores)),
    })
}

/// Full-batch (or mini-batch) gradient descent on the mean hinge loss.
pub fn train_qv(
    train: &LabeledSet,
    test: &LabeledSet,
    cfg: &FitConfig,
) -> Result<(VarModel, TrainingTrace)> {
    cfg.validate()?;
    check_sets(train, test)?;
    let n = train.n_features();
    let embedding = EmbeddingSpec::new(n);
    let ansatz = AnsatzSpec::new(cfg.layers, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta = cfg.init_theta(ansatz.n_params(), &mut rng);
    let mut model = VarModel::new(embedding, ansatz, theta, 0.0)?;

    let mut trace = TrainingTrace::default();
    for epoch in 1..=cfg.epochs {
        for batch in cfg.batches(train.len(), &mut rng) {
            let (g_theta, g_bias) = gradient_on(&model, &train.features, &train.labels, &batch)?;
            for (t, g) in model.theta.iter_mut().zip(&g_theta) {
                *t -= cfg.learning_rate * g;
            }
            model.bias -= cfg.learning_rate * g_bias;
        }
        let train_scores = model.scores(&train.features)?;
        let test_scores = model.scores(&test.features)?;
        trace.records.push(epoch_record(
            epoch,
            train,
            &train_scores,
            test,
            &test_scores,
        )?);
    }
    Ok((model, trace))
}
