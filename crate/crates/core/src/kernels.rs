//! Quantum and classical kernels, Gram-matrix assembly and PSD checks.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    hybrid_kernel_tape, kernel_tape_inversion, kernel_tape_swap, AnsatzSpec, EmbeddingSpec,
};
use crate::error::{Error, Result};
use crate::report::fmt_f64;
use crate::sim::{expectation_z, prob_all_zero, run_tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `|⟨φ(x1)|φ(x2)⟩|²` by the inversion (adjoint) test.
    QuantumInversion {
        embedding: EmbeddingSpec,
    },
    /// The same overlap estimated through a SWAP test on two registers.
    QuantumSwap {
        embedding: EmbeddingSpec,
    },
    /// Overlap of trainable embeddings `S(x)·A(θ)|0⟩`.
    QuantumTrainable {
        embedding: EmbeddingSpec,
        ansatz: AnsatzSpec,
        theta: Vec<f64>,
    },
    Linear,
    PolyHomogeneous {
        degree: u32,
    },
    PolyInhomogeneous {
        degree: u32,
        r: f64,
    },
    Rbf {
        gamma: f64,
    },
    /// `tanh(k·⟨x1,x2⟩ + c)^exponent`; the usual sigmoid kernel has exponent 1.
    Sigmoid {
        k: f64,
        c: f64,
        #[serde(default = "default_exponent")]
        exponent: u32,
    },
}

fn default_exponent() -> u32 {
    1
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::QuantumInversion { embedding } | KernelSpec::QuantumSwap { embedding } => {
                if embedding.n_features == 0 {
                    return Err(Error::config("quantum kernel needs at least one feature"));
                }
            }
            KernelSpec::QuantumTrainable {
                embedding,
                ansatz,
                theta,
            } => {
                ansatz.validate()?;
                if embedding.n_features != ansatz.n_qubits {
                    return Err(Error::config(format!(
                        "embedding uses {} qubits but the ansatz has {}",
                        embedding.n_features, ansatz.n_qubits
                    )));
                }
                if theta.len() != ansatz.n_params() {
                    return Err(Error::config(format!(
                        "trainable kernel expects {} angles, got {}",
                        ansatz.n_params(),
                        theta.len()
                    )));
                }
            }
            KernelSpec::Linear => {}
            KernelSpec::PolyHomogeneous { degree }
            | KernelSpec::PolyInhomogeneous { degree, .. } => {
                if *degree == 0 {
                    return Err(Error::config(
                        "polynomial degree must be a positive integer",
                    ));
                }
            }
            KernelSpec::Rbf { gamma } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::config(format!("rbf gamma must be > 0, got {gamma}")));
                }
            }
            KernelSpec::Sigmoid { exponent, .. } => {
                if *exponent == 0 {
                    return Err(Error::config("sigmoid exponent must be a positive integer"));
                }
            }
        }
        Ok(())
    }

    pub fn is_quantum(&self) -> bool {
        matches!(
            self,
            KernelSpec::QuantumInversion { .. }
                | KernelSpec::QuantumSwap { .. }
                | KernelSpec::QuantumTrainable { .. }
        )
    }

    /// The feature embedding of a quantum kernel.
    pub fn embedding(&self) -> Option<&EmbeddingSpec> {
        match self {
            KernelSpec::QuantumInversion { embedding }
            | KernelSpec::QuantumSwap { embedding }
            | KernelSpec::QuantumTrainable { embedding, .. } => Some(embedding),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::QuantumInversion { .. } => "quantum_inversion",
            KernelSpec::QuantumSwap { .. } => "quantum_swap",
            KernelSpec::QuantumTrainable { .. } => "quantum_trainable",
            KernelSpec::Linear => "linear",
            KernelSpec::PolyHomogeneous { .. } => "poly_homogeneous",
            KernelSpec::PolyInhomogeneous { .. } => "poly_inhomogeneous",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Sigmoid { .. } => "sigmoid",
        }
    }
}

fn check_width(x: &[f64], embedding: &EmbeddingSpec) -> Result<()> {
    if x.len() != embedding.n_features {
        return Err(Error::data(format!(
            "sample has {} features, embedding expects {}",
            x.len(),
            embedding.n_features
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn eval_kernel(x1: &[f64], x2: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::data(format!(
            "kernel arguments differ in length ({} vs {})",
            x1.len(),
            x2.len()
        )));
    }
    if let Some(embedding) = spec.embedding() {
        check_width(x1, embedding)?;
    }
    if spec.is_quantum() && x1 == x2 {
        // A normalized state overlaps itself exactly; the circuit would
        // only add rounding.
        return Ok(1.0);
    }
    let (x1, x2) = canonical_order(x1, x2);
    let value = match spec {
        KernelSpec::QuantumInversion { embedding } => {
            let tape = kernel_tape_inversion(x1, x2, embedding)?;
            prob_all_zero(&run_tape(&tape, &[])?)
        }
        KernelSpec::QuantumSwap { embedding } => {
            let tape = kernel_tape_swap(x1, x2, embedding)?;
            expectation_z(&run_tape(&tape, &[])?, 0)?.clamp(0.0, 1.0)
        }
        KernelSpec::QuantumTrainable {
            embedding,
            ansatz,
            theta,
        } => trainable_kernel(x1, x2, theta, embedding, ansatz)?,
        KernelSpec::Linear => dot(x1, x2),
        KernelSpec::PolyHomogeneous { degree } => dot(x1, x2).powi(*degree as i32),
        KernelSpec::PolyInhomogeneous { degree, r } => (dot(x1, x2) + r).powi(*degree as i32),
        KernelSpec::Rbf { gamma } => {
            let d2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
            (-gamma * d2).exp()
        }
        KernelSpec::Sigmoid { k, c, exponent } => {
            (k * dot(x1, x2) + c).tanh().powi(*exponent as i32)
        }
    };
    Ok(value)
}

/// Orders a pair lexicographically so `k(a, b)` and `k(b, a)` run the same
/// circuit and agree to the last bit.
fn canonical_order<'a>(a: &'a [f64], b: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    let le = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .is_none_or(|o| o.is_lt());
    if le {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn trainable_kernel(
    x1: &[f64],
    x2: &[f64],
    theta: &[f64],
    embedding: &EmbeddingSpec,
    ansatz: &AnsatzSpec,
) -> Result<f64> {
    ansatz.check_theta(theta)?;
    check_width(x1, embedding)?;
    check_width(x2, embedding)?;
    if x1 == x2 {
        return Ok(1.0);
    }
    let (x1, x2) = canonical_order(x1, x2);
    let tape = hybrid_kernel_tape(x1, x2, embedding, ansatz)?;
    Ok(prob_all_zero(&run_tape(&tape, theta)?))
}

/// Square kernel matrix over a sample set, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    values: Vec<f64>,
    sample_ids: Vec<usize>,
}

impl GramMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != size) {
            return Err(Error::data(format!(
                "row {bad} of a {size}x{size} matrix has wrong length"
            )));
        }
        Ok(Self {
            size,
            values: rows.into_iter().flatten().collect(),
            sample_ids: (0..size).collect(),
        })
    }

    pub fn with_sample_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.size {
            return Err(Error::data("sample id count does not match matrix size"));
        }
        self.sample_ids = ids;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    /// Largest `|G_ij - G_ji|`.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.size {
            for j in i + 1..self.size {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row-major CSV, no header, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.size {
            let line: Vec<String> = self.row(i).iter().map(|&v| fmt_f64(v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// `G_ij = k(X_i, X_j)`; the upper triangle is evaluated and mirrored.
pub fn gram_matrix(xs: &[Vec<f64>], spec: &KernelSpec) -> Result<GramMatrix> {
    spec.validate()?;
    let m = xs.len();
    if m == 0 {
        return Err(Error::data("gram matrix needs at least one sample"));
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            eval_kernel(&xs[i], &xs[j], spec)
                .map_err(|e| Error::data(format!("kernel entry ({i}, {j}): {e}")))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; m * m];
    for (&(i, j), &v) in pairs.iter().zip(&entries) {
        values[i * m + j] = v;
        values[j * m + i] = v;
    }
    if spec.is_quantum() {
        for i in 0..m {
            let d = values[i * m + i];
            debug_assert!(d == 1.0, "quantum self-overlap {d} at {i}");
        }
    }
    Ok(GramMatrix {
        size: m,
        values,
        sample_ids: (0..m).collect(),
    })
}

/// `K[r][c] = k(rows[r], cols[c])`.
pub fn cross_kernel(
    rows: &[Vec<f64>],
    cols: &[Vec<f64>],
    spec: &KernelSpec,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    rows.par_iter()
        .map(|r| cols.iter().map(|c| eval_kernel(r, c, spec)).collect())
        .collect()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(gram: &GramMatrix) -> Result<f64> {
    let residual = gram.symmetry_residual();
    if residual > 1e-8 {
        return Err(Error::data(format!(
            "matrix is not symmetric (residual {residual:e})"
        )));
    }
    let eig = symmetric_eigenvalues(&gram.values, gram.size);
    Ok(eig.into_iter().fold(f64::INFINITY, f64::min))
}

/// Eigenvalues of a symmetric `n x n` row-major matrix by cyclic Jacobi
/// rotations, swept until the off-diagonal norm drops below 1e-12 (relative
/// to the Frobenius norm once that exceeds 1).
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n);
    let mut a: Vec<f64> = matrix.to_vec();
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let threshold = 1e-12 * frob.max(1.0);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
