//! Helpers shared by the integration tests: random circuits and states, the
//! default Iris split, and a brute-force dual QP oracle.

#![allow(dead_code)]

use num_complex::Complex64;
use qsvm_lab::data::{bundled_iris, fit_scaler, select_binary, split, LabeledSet, ScalingMethod};
use qsvm_lab::kernels::GramMatrix;
use qsvm_lab::sim::{Angle, CircuitTape, Gate, StateVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// A random angle: constant or a (possibly negated) parameter slot.
pub fn random_angle(rng: &mut ChaCha8Rng, n_params: usize) -> Angle {
    if n_params > 0 && rng.random_bool(0.6) {
        let a = Angle::slot(rng.random_range(0..n_params));
        if rng.random_bool(0.3) {
            a.negate()
        } else {
            a
        }
    } else {
        Angle::Fixed(rng.random_range(-PI..PI))
    }
}

fn distinct_wires(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut wires = Vec::with_capacity(k);
    while wires.len() < k {
        let w = rng.random_range(0..n);
        if !wires.contains(&w) {
            wires.push(w);
        }
    }
    wires
}

/// Random tape over the full gate set. CSWAP appears only when `n >= 3`.
pub fn random_tape(rng: &mut ChaCha8Rng, n: usize, depth: usize, n_params: usize) -> CircuitTape {
    random_tape_with(rng, n, depth, n_params, true)
}

/// Random tape whose parameterized gates are all shiftable rotations.
pub fn random_rotation_tape(
    rng: &mut ChaCha8Rng,
    n: usize,
    depth: usize,
    n_params: usize,
) -> CircuitTape {
    random_tape_with(rng, n, depth, n_params, false)
}

fn random_tape_with(
    rng: &mut ChaCha8Rng,
    n: usize,
    depth: usize,
    n_params: usize,
    cswap: bool,
) -> CircuitTape {
    let mut tape = CircuitTape::new(n, n_params).unwrap();
    for _ in 0..depth {
        let choice = rng.random_range(0..7);
        let gate = match choice {
            0 => Gate::rx(rng.random_range(0..n), random_angle(rng, n_params)),
            1 => Gate::ry(rng.random_range(0..n), random_angle(rng, n_params)),
            2 => Gate::rz(rng.random_range(0..n), random_angle(rng, n_params)),
            3 => {
                let w = rng.random_range(0..n);
                let (a, b, c) = (
                    random_angle(rng, n_params),
                    random_angle(rng, n_params),
                    random_angle(rng, n_params),
                );
                Gate::rot3(w, a, b, c)
            }
            4 => Gate::h(rng.random_range(0..n)),
            5 if n >= 2 => {
                let w = distinct_wires(rng, n, 2);
                Gate::cnot(w[0], w[1]).unwrap()
            }
            6 if n >= 3 && cswap => {
                let w = distinct_wires(rng, n, 3);
                Gate::cswap(w[0], w[1], w[2]).unwrap()
            }
            _ => Gate::h(rng.random_range(0..n)),
        };
        tape.push(gate).unwrap();
    }
    tape
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Random normalized state with uniform real and imaginary parts.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let mut amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps).unwrap()
}

/// Marginal `P(bit w = 1)` for every wire, from the amplitudes.
pub fn marginals(state: &StateVector) -> Vec<f64> {
    let n = state.n_qubits();
    (0..n)
        .map(|w| {
            let bit = 1usize << (n - 1 - w);
            state
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(i, _)| i & bit != 0)
                .map(|(_, a)| a.norm_sqr())
                .sum()
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Scaled versicolor/virginica split used by the default experiments.
pub fn iris_split(seed: u64) -> (LabeledSet, LabeledSet) {
    let set = select_binary(&bundled_iris(), "versicolor", "virginica").unwrap();
    let (train, test, _) = split(&set, 0.3, seed).unwrap();
    let scaler = fit_scaler(&train.features, ScalingMethod::Standard).unwrap();
    (
        train.with_features(scaler.apply(&train.features).unwrap()),
        test.with_features(scaler.apply(&test.features).unwrap()),
    )
}

/// Seeded 2-D two-class dataset with both labels present.
pub fn random_blobs(rng: &mut ChaCha8Rng, m: usize, separation: f64) -> (Vec<Vec<f64>>, Vec<i8>) {
    let labels: Vec<i8> = (0..m).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let xs = labels
        .iter()
        .map(|&y| {
            let c = f64::from(y) * separation / 2.0;
            vec![
                c + rng.random_range(-1.0..1.0),
                c + rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    (xs, labels)
}

/// Best dual objective `Σα - ½ αᵀQα` (with `Q_ij = y_i y_j K_ij`) over the
/// feasible set `0 <= α <= C`, `Σ α_i y_i = 0`.
///
/// The first `m - 2` coordinates range over the grid `{0, h, ..., C}` with
/// `h = 0.01·C`. The equality constraint pins the last coordinate to the
/// second-to-last, which leaves a concave 1-D quadratic on an interval; that
/// is maximized exactly. The result therefore lies between the pure grid
/// optimum and the true optimum.
pub fn grid_dual_optimum(gram: &GramMatrix, labels: &[i8], c: f64) -> f64 {
    let m = labels.len();
    assert!(m >= 2, "oracle needs at least two points");
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let q: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| y[i] * y[j] * gram.get(i, j)).collect())
        .collect();
    let steps = 100usize;
    let h = c / steps as f64;

    struct Walk<'a> {
        m: usize,
        c: f64,
        h: f64,
        steps: usize,
        y: &'a [f64],
        q: &'a [Vec<f64>],
        u: Vec<f64>,
        best: f64,
    }

    impl Walk<'_> {
        /// `w_prefix` is the objective of the fixed prefix; `s = Σ y_k α_k` over it.
        fn go(&mut self, depth: usize, w_prefix: f64, s: f64) {
            let (i, j) = (self.m - 2, self.m - 1);
            if depth == i {
                self.leaf(i, j, w_prefix, s);
                return;
            }
            for step in 0..=self.steps {
                let a = step as f64 * self.h;
                let w = w_prefix + a - a * self.u[depth] - 0.5 * self.q[depth][depth] * a * a;
                if a > 0.0 {
                    for k in 0..self.m {
                        self.u[k] += a * self.q[depth][k];
                    }
                }
                self.go(depth + 1, w, s + self.y[depth] * a);
                if a > 0.0 {
                    for k in 0..self.m {
                        self.u[k] -= a * self.q[depth][k];
                    }
                }
            }
        }

        fn leaf(&mut self, i: usize, j: usize, w_prefix: f64, s: f64) {
            // y_i a + y_j b = -s  =>  b = b0 - σ a.
            let sigma = self.y[i] * self.y[j];
            let b0 = -self.y[j] * s;
            let (mut lo, mut hi) = (0.0f64, self.c);
            if sigma > 0.0 {
                lo = lo.max(b0 - self.c);
                hi = hi.min(b0);
            } else {
                lo = lo.max(-b0);
                hi = hi.min(self.c - b0);
            }
            if lo > hi + 1e-12 {
                return;
            }
            let hi = hi.max(lo);
            let (ui, uj) = (self.u[i], self.u[j]);
            let (qii, qij, qjj) = (self.q[i][i], self.q[i][j], self.q[j][j]);
            let f = |a: f64| {
                let b = b0 - sigma * a;
                w_prefix + a + b
                    - a * ui
                    - b * uj
                    - 0.5 * (qii * a * a + 2.0 * qij * a * b + qjj * b * b)
            };
            let (f0, fp, fm) = (f(0.0), f(1.0), f(-1.0));
            let slope = 0.5 * (fp - fm);
            let curvature = 2.0 * f0 - fp - fm;
            let mut best = f(lo).max(f(hi));
            if curvature > 1e-12 {
                best = best.max(f((slope / curvature).clamp(lo, hi)));
            }
            if best > self.best {
                self.best = best;
            }
        }
    }

    let mut walk = Walk {
        m,
        c,
        h,
        steps,
        y: &y,
        q: &q,
        u: vec![0.0; m],
        best: f64::NEG_INFINITY,
    };
    walk.go(0, 0.0, 0.0);
    walk.best
}
