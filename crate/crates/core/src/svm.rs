//! Soft-margin kernel SVM trained by simplified SMO on a precomputed Gram matrix.
//!
//! The dual solved is
//!
//! ```text
//! max  Σ α_i - ½ Σ_ij α_i α_j y_i y_j K_ij
//! s.t. 0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//! ```
//!
//! and the decision function is `f(x) = Σ α_i y_i k(x_i, x) + b`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    cross_kernel, eval_kernel, gram_matrix, min_eigenvalue, GramMatrix, KernelSpec,
};

/// Alphas above this count as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Smallest alpha change that counts as progress in a pairwise step.
const MIN_STEP: f64 = 1e-10;

/// Floor for the tightened working tolerance.
const MIN_WORKING_TOLERANCE: f64 = 1e-9;

/// Hard cap on full passes, independent of `max_passes`.
const MAX_TOTAL_PASSES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub tolerance: f64,
    /// Consecutive passes without an update before stopping.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 50,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::config(format!("C must be > 0, got {}", self.c)));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::config("SMO tolerance must be > 0"));
        }
        if self.max_passes == 0 {
            return Err(Error::config("max_passes must be positive"));
        }
        Ok(())
    }
}

/// Output of the dual solver, independent of how the Gram matrix was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub passes: usize,
    /// Non-fatal observations, e.g. an indefinite Gram matrix.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub(crate) fn check_labels(labels: &[i8]) -> Result<()> {
    if let Some(pos) = labels.iter().position(|&y| y != 1 && y != -1) {
        return Err(Error::data(format!(
            "label {} at index {pos} is not +1 or -1",
            labels[pos]
        )));
    }
    Ok(())
}

/// Simplified SMO: sweep the samples, and for each KKT violator try a random
/// partner first, then every other partner in turn. Stops after
/// `cfg.max_passes` consecutive sweeps with no update.
pub fn smo_train(gram: &GramMatrix, labels: &[i8], cfg: &TrainConfig) -> Result<DualSolution> {
    cfg.validate()?;
    let m = gram.size();
    if labels.len() != m {
        return Err(Error::data(format!(
            "{} labels for a {m}x{m} Gram matrix",
            labels.len()
        )));
    }
    check_labels(labels)?;
    if m == 0 || labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::DegenerateData(
            "training labels must contain both classes".into(),
        ));
    }

    let mut warnings = Vec::new();
    let lambda_min = min_eigenvalue(gram)?;
    if lambda_min < -1e-6 {
        warnings.push(format!(
            "gram matrix is not positive semidefinite (min eigenvalue {lambda_min:e})"
        ));
    }

    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let mut solver = Smo {
        gram,
        y: &y,
        c: cfg.c,
        alphas: vec![0.0; m],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // The sweeps test KKT against the running bias, but the returned bias is
    // re-estimated at the end. When that shifts a margin past the tolerance,
    // keep sweeping at a tighter working tolerance.
    let mut tol = cfg.tolerance;
    let mut passes = 0;
    let bias = loop {
        let mut quiet = 0;
        while quiet < cfg.max_passes && passes < MAX_TOTAL_PASSES {
            passes += 1;
            let mut changed = 0;
            for i in 0..m {
                if !solver.violates_kkt(i, tol) {
                    continue;
                }
                let mut j = rng.random_range(0..m - 1);
                if j >= i {
                    j += 1;
                }
                if solver.take_step(i, j) {
                    changed += 1;
                    continue;
                }
                let start = rng.random_range(0..m);
                for off in 0..m {
                    let j = (start + off) % m;
                    if j != i && solver.take_step(i, j) {
                        changed += 1;
                        break;
                    }
                }
            }
            quiet = if changed == 0 { quiet + 1 } else { 0 };
        }
        let bias = solver.final_bias();
        if passes >= MAX_TOTAL_PASSES
            || tol <= MIN_WORKING_TOLERANCE
            || solver.satisfies_kkt(bias, cfg.tolerance)
        {
            break bias;
        }
        tol *= 0.1;
    };
    Ok(DualSolution {
        alphas: solver.alphas,
        bias,
        c: cfg.c,
        passes,
        warnings,
    })
}

struct Smo<'a> {
    gram: &'a GramMatrix,
    y: &'a [f64],
    c: f64,
    alphas: Vec<f64>,
    bias: f64,
}

impl Smo<'_> {
    /// `Σ_k α_k y_k K_ik`, without the bias.
    fn margin_sum(&self, i: usize) -> f64 {
        self.gram
            .row(i)
            .iter()
            .zip(&self.alphas)
            .zip(self.y)
            .map(|((k, a), y)| a * y * k)
            .sum()
    }

    fn error(&self, i: usize) -> f64 {
        self.margin_sum(i) + self.bias - self.y[i]
    }

    fn violates_kkt(&self, i: usize, tol: f64) -> bool {
        let r = self.y[i] * self.error(i);
        (r < -tol && self.alphas[i] < self.c) || (r > tol && self.alphas[i] > 0.0)
    }

    fn satisfies_kkt(&self, bias: f64, tol: f64) -> bool {
        (0..self.alphas.len()).all(|i| {
            kkt_holds(
                self.alphas[i],
                self.c,
                self.y[i] * (self.margin_sum(i) + bias),
                tol,
            )
        })
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alphas[i], self.alphas[j]);
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo < MIN_STEP {
            return false;
        }
        let (kii, kjj, kij) = (
            self.gram.get(i, i),
            self.gram.get(j, j),
            self.gram.get(i, j),
        );
        let eta = 2.0 * kij - kii - kjj;
        if eta >= 0.0 {
            return false;
        }
        let (ei, ej) = (self.error(i), self.error(j));
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < MIN_STEP {
            return false;
        }
        let ai_new = (ai + yi * yj * (aj - aj_new)).clamp(0.0, self.c);
        let (di, dj) = (ai_new - ai, aj_new - aj);
        let b1 = self.bias - ei - yi * di * kii - yj * dj * kij;
        let b2 = self.bias - ej - yi * di * kij - yj * dj * kjj;
        self.bias = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        self.alphas[i] = ai_new;
        self.alphas[j] = aj_new;
        debug_assert!(
            self.alphas
                .iter()
                .zip(self.y)
                .map(|(a, y)| a * y)
                .sum::<f64>()
                .abs()
                <= 1e-8,
            "pair update ({i}, {j}) broke Σ α y = 0"
        );
        true
    }

    /// Mean over free support vectors of `y_i - Σ α y K_i`; with no free
    /// vectors, the midpoint of the interval the bound vectors allow.
    fn final_bias(&self) -> f64 {
        let m = self.alphas.len();
        let free: Vec<usize> = (0..m)
            .filter(|&i| {
                self.alphas[i] > SUPPORT_THRESHOLD && self.alphas[i] < self.c - SUPPORT_THRESHOLD
            })
            .collect();
        if !free.is_empty() {
            return free
                .iter()
                .map(|&i| self.y[i] - self.margin_sum(i))
                .sum::<f64>()
                / free.len() as f64;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..m {
            let g = self.margin_sum(i);
            let at_zero = self.alphas[i] <= SUPPORT_THRESHOLD;
            // at zero: y(g + b) >= 1; at C: y(g + b) <= 1
            let bound = self.y[i] - g;
            match (at_zero, self.y[i] > 0.0) {
                (true, true) | (false, false) => lo = lo.max(bound),
                (true, false) | (false, true) => hi = hi.min(bound),
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }
}

/// `Σ α_i - ½ Σ_ij α_i α_j y_i y_j K_ij`.
pub fn dual_objective(alphas: &[f64], labels: &[i8], gram: &GramMatrix) -> f64 {
    let m = alphas.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alphas[i]
                * alphas[j]
                * f64::from(labels[i])
                * f64::from(labels[j])
                * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// KKT conditions for one sample with functional margin `margin = y·f(x)`.
fn kkt_holds(alpha: f64, c: f64, margin: f64, tol: f64) -> bool {
    if alpha <= SUPPORT_THRESHOLD {
        margin >= 1.0 - tol
    } else if alpha >= c - SUPPORT_THRESHOLD {
        margin <= 1.0 + tol
    } else {
        (margin - 1.0).abs() <= tol
    }
}

/// Indices violating the KKT conditions at tolerance `tol`.
pub fn kkt_violations(
    sol: &DualSolution,
    labels: &[i8],
    gram: &GramMatrix,
    tol: f64,
) -> Vec<usize> {
    (0..sol.alphas.len())
        .filter(|&i| {
            let f: f64 = (0..sol.alphas.len())
                .map(|k| sol.alphas[k] * f64::from(labels[k]) * gram.get(i, k))
                .sum::<f64>()
                + sol.bias;
            !kkt_holds(sol.alphas[i], sol.c, f64::from(labels[i]) * f, tol)
        })
        .collect()
}

/// A trained classifier: dual solution plus the kernel and retained samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub labels: Vec<i8>,
    pub support_indices: Vec<usize>,
    pub kernel: KernelSpec,
    pub training_x: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SvmModel {
    pub fn from_dual(
        sol: DualSolution,
        kernel: KernelSpec,
        training_x: Vec<Vec<f64>>,
        labels: Vec<i8>,
    ) -> Result<Self> {
        if training_x.len() != sol.alphas.len() || labels.len() != sol.alphas.len() {
            return Err(Error::data(
                "dual solution size does not match the training set",
            ));
        }
        let support_indices = sol
            .alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > SUPPORT_THRESHOLD)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            alphas: sol.alphas,
            bias: sol.bias,
            c: sol.c,
            labels,
            support_indices,
            kernel,
            training_x,
            warnings: sol.warnings,
        })
    }

    /// Gram matrix, SMO and model assembly in one call.
    pub fn fit(
        xs: &[Vec<f64>],
        labels: &[i8],
        kernel: KernelSpec,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        let gram = gram_matrix(xs, &kernel)?;
        let sol = smo_train(&gram, labels, cfg)?;
        Self::from_dual(sol, kernel, xs.to_vec(), labels.to_vec())
    }

    pub fn n_features(&self) -> usize {
        self.training_x.first().map_or(0, Vec::len)
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if self.support_indices.is_empty() {
            return Err(Error::data("model has no support vectors"));
        }
        if x.len() != self.n_features() {
            return Err(Error::data(format!(
                "query has {} features, model was trained on {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        let mut acc = self.bias;
        for &i in &self.support_indices {
            acc += self.alphas[i]
                * f64::from(self.labels[i])
                * eval_kernel(&self.training_x[i], x, &self.kernel)?;
        }
        Ok(acc)
    }

    /// Decision values for many queries, evaluated concurrently.
    pub fn decision_values(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        for x in xs {
            self.check_query(x)?;
        }
        let svs: Vec<Vec<f64>> = self
            .support_indices
            .iter()
            .map(|&i| self.training_x[i].clone())
            .collect();
        let k = cross_kernel(xs, &svs, &self.kernel)?;
        Ok(k.par_iter()
            .map(|row| {
                self.support_indices
                    .iter()
                    .zip(row)
                    .fold(self.bias, |acc, (&i, kv)| {
                        acc + self.alphas[i] * f64::from(self.labels[i]) * kv
                    })
            })
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(sign_label(self.decision_function(x)?))
    }
}

/// `sign(v)` as a label, with ties going to +1.
pub fn sign_label(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}
