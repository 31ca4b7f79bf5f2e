//! Hybrid classifier: a kernel expansion `f(x) = Σ_i w_i k_θ(x_i, x) + b`
//! over a trainable quantum kernel, with `(θ, w, b)` trained jointly on the
//! mean hinge loss. [`refit_svm`] instead freezes θ and hands the trained
//! kernel to the SMO solver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{param_shift_gradient, Observable};
use crate::circuits::{hybrid_kernel_tape, AnsatzSpec, EmbeddingSpec};
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::kernels::{trainable_kernel, KernelSpec};
use crate::svm::{sign_label, SvmModel, TrainConfig};
use crate::variational::{
    check_set, check_sets, epoch_record, mean_hinge, FitConfig, TrainingTrace,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvkModel {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub training_x: Vec<Vec<f64>>,
    pub training_y: Vec<i8>,
    pub embedding: EmbeddingSpec,
    pub ansatz: AnsatzSpec,
}

impl QvkModel {
    pub fn new(
        embedding: EmbeddingSpec,
        ansatz: AnsatzSpec,
        theta: Vec<f64>,
        weights: Vec<f64>,
        bias: f64,
        training: &LabeledSet,
    ) -> Result<Self> {
        if embedding.n_features != ansatz.n_qubits {
            return Err(Error::config(format!(
                "embedding uses {} qubits but the ansatz has {}",
                embedding.n_features, ansatz.n_qubits
            )));
        }
        ansatz.check_theta(&theta)?;
        if weights.len() != training.len() {
            return Err(Error::data(format!(
                "{} weights for {} retained samples",
                weights.len(),
                training.len()
            )));
        }
        Ok(Self {
            theta,
            weights,
            bias,
            training_x: training.features.clone(),
            training_y: training.labels.clone(),
            embedding,
            ansatz,
        })
    }

    /// The trained kernel as a standalone spec.
    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec::QuantumTrainable {
            embedding: self.embedding,
            ansatz: self.ansatz.clone(),
            theta: self.theta.clone(),
        }
    }

    pub fn kernel(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        qvk_kernel(x1, x2, &self.theta, &self.embedding, &self.ansatz)
    }

    pub fn scores(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| qvk_score(self, x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(sign_label(qvk_score(self, x)?))
    }

    /// Kernel matrix over the retained samples (row-major, symmetric).
    fn train_kernel(&self) -> Result<Vec<f64>> {
        kernel_matrix(&self.training_x, &self.theta, &self.embedding, &self.ansatz)
    }
}

/// All-zero probability of the trainable-kernel tape.
pub fn qvk_kernel(
    x1: &[f64],
    x2: &[f64],
    theta: &[f64],
    embedding: &EmbeddingSpec,
    ansatz: &AnsatzSpec,
) -> Result<f64> {
    trainable_kernel(x1, x2, theta, embedding, ansatz)
}

/// `Σ_i w_i k_θ(x_i, x) + b`.
pub fn qvk_score(model: &QvkModel, x: &[f64]) -> Result<f64> {
    let mut acc = model.bias;
    for (xi, w) in model.training_x.iter().zip(&model.weights) {
        acc += w * model.kernel(xi, x)?;
    }
    Ok(acc)
}

fn kernel_matrix(
    xs: &[Vec<f64>],
    theta: &[f64],
    emb: &EmbeddingSpec,
    ansatz: &AnsatzSpec,
) -> Result<Vec<f64>> {
    let m = xs.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| qvk_kernel(&xs[i], &xs[j], theta, emb, ansatz))
        .collect::<Result<_>>()?;
    let mut k = vec![0.0; m * m];
    for i in 0..m {
        k[i * m + i] = 1.0;
    }
    for (&(i, j), &v) in pairs.iter().zip(&vals) {
        k[i * m + j] = v;
        k[j * m + i] = v;
    }
    Ok(k)
}

/// Gradient of the mean hinge loss with respect to every trainable part.
#[derive(Debug, Clone, PartialEq)]
pub struct QvkGradient {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Mean hinge loss of the model on its own retained training samples.
pub fn qvk_cost(model: &QvkModel) -> Result<f64> {
    let k = model.train_kernel()?;
    let scores = train_scores(model, &k);
    mean_hinge(&model.training_y, &scores)
}

/// Gradient of [`qvk_cost`]. θ-derivatives of each kernel entry come from
/// the parameter-shift rule, summed over both occurrences of every angle.
pub fn qvk_cost_gradient(model: &QvkModel) -> Result<QvkGradient> {
    let k = model.train_kernel()?;
    let batch: Vec<usize> = (0..model.training_x.len()).collect();
    hinge_gradient(model, &k, &batch)
}

fn train_scores(model: &QvkModel, k: &[f64]) -> Vec<f64> {
    let m = model.weights.len();
    (0..m)
        .map(|j| (0..m).map(|i| model.weights[i] * k[i * m + j]).sum::<f64>() + model.bias)
        .collect()
}

fn hinge_gradient(model: &QvkModel, k: &[f64], batch: &[usize]) -> Result<QvkGradient> {
    let m = model.weights.len();
    let scale = 1.0 / batch.len() as f64;
    let scores = train_scores(model, k);
    let mut grad_w = vec![0.0; m];
    let mut grad_b = 0.0;
    // coef[i * m + j]: weight of dK_ij/dθ in the θ-gradient.
    let mut coef = vec![0.0; m * m];
    for &j in batch {
        let y = f64::from(model.training_y[j]);
        if 1.0 - y * scores[j] <= 0.0 {
            continue;
        }
        grad_b -= scale * y;
        for i in 0..m {
            grad_w[i] -= scale * y * k[i * m + j];
            coef[i * m + j] -= scale * y * model.weights[i];
        }
    }
    // K is symmetric and its diagonal is pinned at 1.
    let pairs: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, coef[i * m + j] + coef[j * m + i]))
        .filter(|&(_, _, c)| c != 0.0)
        .collect();
    let grads: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j, _)| {
            let tape = hybrid_kernel_tape(
                &model.training_x[i],
                &model.training_x[j],
                &model.embedding,
                &model.ansatz,
            )?;
            param_shift_gradient(&tape, &model.theta, Observable::AllZeroProjector)
        })
        .collect::<Result<_>>()?;
    let mut grad_theta = vec![0.0; model.theta.len()];
    for ((_, _, c), g) in pairs.iter().zip(&grads) {
        for (acc, v) in grad_theta.iter_mut().zip(g) {
            *acc += c * v;
        }
    }
    Ok(QvkGradient {
        theta: grad_theta,
        weights: grad_w,
        bias: grad_b,
    })
}

/// Joint gradient descent on `(θ, w, b)`. Starts from `w_i = y_i / m`,
/// `b = 0` and θ uniform in `[-init_scale, init_scale]`.
pub fn train_qvk(
    train: &LabeledSet,
    test: &LabeledSet,
    cfg: &FitConfig,
) -> Result<(QvkModel, TrainingTrace)> {
    cfg.validate()?;
    check_sets(train, test)?;
    let n = train.n_features();
    let m = train.len();
    let embedding = EmbeddingSpec::new(n);
    let ansatz = AnsatzSpec::new(cfg.layers, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta = cfg.init_theta(ansatz.n_params(), &mut rng);
    let weights = train
        .labels
        .iter()
        .map(|&y| f64::from(y) / m as f64)
        .collect();
    let mut model = QvkModel::new(embedding, ansatz, theta, weights, 0.0, train)?;

    let mut k = model.train_kernel()?;
    let mut trace = TrainingTrace::default();
    for epoch in 1..=cfg.epochs {
        for batch in cfg.batches(m, &mut rng) {
            let g = hinge_gradient(&model, &k, &batch)?;
            let lr = cfg.learning_rate;
            for (t, d) in model.theta.iter_mut().zip(&g.theta) {
                *t -= lr * d;
            }
            for (w, d) in model.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            model.bias -= lr * g.bias;
            k = model.train_kernel()?;
        }
        let train_scores = train_scores(&model, &k);
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

/// Freezes θ and trains a standard SVM on the resulting kernel.
pub fn refit_svm(model: &QvkModel, train: &LabeledSet, cfg: &TrainConfig) -> Result<SvmModel> {
    check_set(&train.features, &train.labels)?;
    SvmModel::fit(&train.features, &train.labels, model.kernel_spec(), cfg)
}
