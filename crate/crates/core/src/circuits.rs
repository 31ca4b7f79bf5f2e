//! Builders for the embedding, ansatz and composed kernel/classifier tapes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Angle, CircuitTape, Gate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    #[default]
    X,
    Y,
    Z,
}

impl RotationAxis {
    fn gate(self, wire: usize, angle: Angle) -> Gate {
        match self {
            RotationAxis::X => Gate::rx(wire, angle),
            RotationAxis::Y => Gate::ry(wire, angle),
            RotationAxis::Z => Gate::rz(wire, angle),
        }
    }
}

/// Angle embedding: one feature per qubit, encoded as a rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub n_features: usize,
    #[serde(default)]
    pub axis: RotationAxis,
}

impl EmbeddingSpec {
    pub fn new(n_features: usize) -> Self {
        Self {
            n_features,
            axis: RotationAxis::X,
        }
    }

    pub fn with_axis(mut self, axis: RotationAxis) -> Self {
        self.axis = axis;
        self
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::data(format!(
                "feature vector has {} entries, embedding expects {}",
                x.len(),
                self.n_features
            )));
        }
        Ok(())
    }
}

/// Layered entangling ansatz: per layer, a ROT3 on every qubit followed by
/// a ring of CNOTs `i -> (i + range) mod n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_layers: usize,
    pub n_qubits: usize,
    pub entangler_ranges: Vec<usize>,
}

impl AnsatzSpec {
    /// Default ranges `(l mod (n - 1)) + 1`; a single qubit gets no entanglers.
    pub fn new(n_layers: usize, n_qubits: usize) -> Result<Self> {
        let ranges = (0..n_layers)
            .map(|l| {
                if n_qubits > 1 {
                    l % (n_qubits - 1) + 1
                } else {
                    1
                }
            })
            .collect();
        Self::with_ranges(n_layers, n_qubits, ranges)
    }

    pub fn with_ranges(
        n_layers: usize,
        n_qubits: usize,
        entangler_ranges: Vec<usize>,
    ) -> Result<Self> {
        let spec = Self {
            n_layers,
            n_qubits,
            entangler_ranges,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || self.n_qubits == 0 {
            return Err(Error::config(
                "ansatz needs at least one layer and one qubit",
            ));
        }
        if self.entangler_ranges.len() != self.n_layers {
            return Err(Error::config(format!(
                "{} entangler ranges for {} layers",
                self.entangler_ranges.len(),
                self.n_layers
            )));
        }
        let bound = self.n_qubits.max(2);
        if let Some(r) = self
            .entangler_ranges
            .iter()
            .find(|&&r| r == 0 || r >= bound)
        {
            return Err(Error::config(format!(
                "entangler range {r} outside 1..{bound}"
            )));
        }
        Ok(())
    }

    /// Number of trainable angles, `3 · layers · qubits`.
    pub fn n_params(&self) -> usize {
        3 * self.n_layers * self.n_qubits
    }

    /// Flat index of angle `angle` of the ROT3 on `qubit` in `layer`.
    pub fn slot(&self, layer: usize, qubit: usize, angle: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + angle
    }

    pub(crate) fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::data(format!(
                "ansatz expects {} angles, got {}",
                self.n_params(),
                theta.len()
            )));
        }
        Ok(())
    }
}

pub fn angle_embedding(x: &[f64], spec: &EmbeddingSpec) -> Result<CircuitTape> {
    spec.check(x)?;
    let mut tape = CircuitTape::new(spec.n_features, 0)?;
    for (wire, &v) in x.iter().enumerate() {
        tape.push(spec.axis.gate(wire, Angle::Fixed(v)))?;
    }
    Ok(tape)
}

pub fn layered_ansatz(spec: &AnsatzSpec) -> Result<CircuitTape> {
    spec.validate()?;
    let n = spec.n_qubits;
    let mut tape = CircuitTape::new(n, spec.n_params())?;
    for (layer, &range) in spec.entangler_ranges.iter().enumerate() {
        for q in 0..n {
            let slot = |a| Angle::slot(spec.slot(layer, q, a));
            tape.push(Gate::rot3(q, slot(0), slot(1), slot(2)))?;
        }
        if n > 1 {
            for i in 0..n {
                tape.push(Gate::cnot(i, (i + range) % n)?)?;
            }
        }
    }
    Ok(tape)
}

/// Inversion-test kernel tape: `S(x1)` followed by `S(x2)†`. The kernel is
/// the all-zero probability of the final state.
pub fn kernel_tape_inversion(x1: &[f64], x2: &[f64], spec: &EmbeddingSpec) -> Result<CircuitTape> {
    check_pair(x1, x2)?;
    let mut tape = angle_embedding(x1, spec)?;
    tape.extend(&angle_embedding(x2, spec)?.adjoint())?;
    Ok(tape)
}

/// SWAP-test kernel tape on `2f + 1` qubits. Wire 0 is the ancilla, wires
/// `1..=f` hold `S(x1)` and wires `f+1..=2f` hold `S(x2)`. The kernel is
/// `2·P(ancilla = 0) - 1`, i.e. ⟨Z⟩ on wire 0.
pub fn kernel_tape_swap(x1: &[f64], x2: &[f64], spec: &EmbeddingSpec) -> Result<CircuitTape> {
    check_pair(x1, x2)?;
    spec.check(x1)?;
    let f = spec.n_features;
    let mut tape = CircuitTape::new(2 * f + 1, 0)?;
    tape.push(Gate::h(0))?;
    for (i, (&a, &b)) in x1.iter().zip(x2).enumerate() {
        tape.push(spec.axis.gate(1 + i, Angle::Fixed(a)))?;
        tape.push(spec.axis.gate(1 + f + i, Angle::Fixed(b)))?;
    }
    for i in 0..f {
        tape.push(Gate::cswap(0, 1 + i, 1 + f + i)?)?;
    }
    tape.push(Gate::h(0))?;
    Ok(tape)
}

/// Classifier tape: `S(x)` followed by the ansatz. The raw score is ⟨Z⟩ on
/// wire 0 of the final state.
pub fn variational_tape(
    x: &[f64],
    emb: &EmbeddingSpec,
    ansatz: &AnsatzSpec,
) -> Result<CircuitTape> {
    check_dims(emb, ansatz)?;
    let mut tape = angle_embedding(x, emb)?;
    tape.extend(&layered_ansatz(ansatz)?)?;
    Ok(tape)
}

/// Trainable-kernel tape `V(x1; θ)` then `V(x2; θ)†`, where the trainable
/// embedding `V(x; θ) = S(x) · A(θ)` prepares `A(θ)|0⟩` and then encodes `x`.
///
/// With the ansatz applied after `S(x)` instead, `A(θ)` would meet `A(θ)†`
/// in the middle of the tape and cancel, leaving the plain kernel.
/// Every ansatz slot occurs twice: once directly and once negated.
pub fn hybrid_kernel_tape(
    x1: &[f64],
    x2: &[f64],
    emb: &EmbeddingSpec,
    ansatz: &AnsatzSpec,
) -> Result<CircuitTape> {
    check_dims(emb, ansatz)?;
    check_pair(x1, x2)?;
    let mut tape = trainable_embedding(x1, emb, ansatz)?;
    tape.extend(&trainable_embedding(x2, emb, ansatz)?.adjoint())?;
    Ok(tape)
}

fn trainable_embedding(x: &[f64], emb: &EmbeddingSpec, ansatz: &AnsatzSpec) -> Result<CircuitTape> {
    let mut tape = layered_ansatz(ansatz)?;
    tape.extend(&angle_embedding(x, emb)?)?;
    Ok(tape)
}

fn check_pair(x1: &[f64], x2: &[f64]) -> Result<()> {
    if x1.len() != x2.len() {
        return Err(Error::data(format!(
            "feature vectors differ in length ({} vs {})",
            x1.len(),
            x2.len()
        )));
    }
    Ok(())
}

fn check_dims(emb: &EmbeddingSpec, ansatz: &AnsatzSpec) -> Result<()> {
    if emb.n_features != ansatz.n_qubits {
        return Err(Error::config(format!(
            "embedding uses {} qubits but the ansatz has {}",
            emb.n_features, ansatz.n_qubits
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{expectation_z, prob_all_zero, run_tape, GateKind};
    use std::f64::consts::PI;

    fn inversion_kernel(x1: &[f64], x2: &[f64]) -> f64 {
        let spec = EmbeddingSpec::new(x1.len());
        let tape = kernel_tape_inversion(x1, x2, &spec).unwrap();
        prob_all_zero(&run_tape(&tape, &[]).unwrap())
    }

    fn swap_kernel(x1: &[f64], x2: &[f64]) -> f64 {
        let spec = EmbeddingSpec::new(x1.len());
        let tape = kernel_tape_swap(x1, x2, &spec).unwrap();
        expectation_z(&run_tape(&tape, &[]).unwrap(), 0).unwrap()
    }

    #[test]
    fn embedding_of_zeros_is_identity() {
        let tape = angle_embedding(&[0.0; 4], &EmbeddingSpec::new(4)).unwrap();
        assert_eq!(tape.len(), 4);
        assert!(tape.gates().iter().all(|g| g.kind() == GateKind::Rx));
        let s = run_tape(&tape, &[]).unwrap();
        assert!((prob_all_zero(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embedding_single_feature_pi() {
        let s = run_tape(
            &angle_embedding(&[PI], &EmbeddingSpec::new(1)).unwrap(),
            &[],
        )
        .unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].im + 1.0).abs() < 1e-15);
    }

    #[test]
    fn embedding_product_state() {
        let (a, b) = (0.4, 1.3);
        let s = run_tape(
            &angle_embedding(&[a, b], &EmbeddingSpec::new(2)).unwrap(),
            &[],
        )
        .unwrap();
        let expect = (a / 2.0).cos().powi(2) * (b / 2.0).cos().powi(2);
        assert!((prob_all_zero(&s) - expect).abs() < 1e-14);
    }

    #[test]
    fn embedding_length_mismatch() {
        let err = angle_embedding(&[1.0, 2.0], &EmbeddingSpec::new(3)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(kernel_tape_inversion(&[1.0], &[1.0, 2.0], &EmbeddingSpec::new(1)).is_err());
        assert!(kernel_tape_swap(&[1.0], &[1.0, 2.0], &EmbeddingSpec::new(1)).is_err());
    }

    #[test]
    fn ansatz_shapes() {
        let single = layered_ansatz(&AnsatzSpec::new(1, 1).unwrap()).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.n_params(), 3);

        let spec = AnsatzSpec::new(2, 4).unwrap();
        assert_eq!(spec.entangler_ranges, vec![1, 2]);
        let tape = layered_ansatz(&spec).unwrap();
        assert_eq!(tape.n_params(), 24);
        // layer 1 ring uses range 2
        let cnots: Vec<_> = tape
            .gates()
            .iter()
            .filter(|g| g.kind() == GateKind::Cnot)
            .map(|g| (g.wires()[0], g.wires()[1]))
            .collect();
        assert_eq!(&cnots[..4], &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(&cnots[4..], &[(0, 2), (1, 3), (2, 0), (3, 1)]);
    }

    #[test]
    fn ansatz_slot_order_is_layer_qubit_angle() {
        let spec = AnsatzSpec::new(2, 2).unwrap();
        let tape = layered_ansatz(&spec).unwrap();
        let slots: Vec<usize> = tape
            .gates()
            .iter()
            .flat_map(|g| {
                g.angles()
                    .iter()
                    .filter_map(|a| a.slot_derivative().map(|(i, _)| i))
            })
            .collect();
        assert_eq!(slots, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn zero_ansatz_is_identity_on_zero_state() {
        let spec = AnsatzSpec::new(1, 2).unwrap();
        let s = run_tape(&layered_ansatz(&spec).unwrap(), &[0.0; 6]).unwrap();
        assert!((prob_all_zero(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ansatz_validation() {
        assert!(AnsatzSpec::new(0, 2).is_err());
        assert!(AnsatzSpec::with_ranges(1, 3, vec![3]).is_err());
        assert!(AnsatzSpec::with_ranges(1, 3, vec![0]).is_err());
        assert!(AnsatzSpec::with_ranges(2, 3, vec![1]).is_err());
        assert!(AnsatzSpec::with_ranges(1, 1, vec![1]).is_ok());
    }

    #[test]
    fn inversion_kernel_closed_forms() {
        assert!((inversion_kernel(&[0.3, -1.0], &[0.3, -1.0]) - 1.0).abs() < 1e-14);
        let expect1 = 0.5f64.cos().powi(2);
        assert!((inversion_kernel(&[0.0], &[1.0]) - expect1).abs() < 1e-14);
        assert!((expect1 - 0.770151).abs() < 1e-6);
        let k4 = inversion_kernel(&[0.0; 4], &[1.0; 4]);
        assert!((k4 - expect1.powi(4)).abs() < 1e-14);
        assert!((k4 - 0.35181).abs() < 1e-5);
    }

    #[test]
    fn swap_test_matches_inversion() {
        assert!((swap_kernel(&[0.2, 0.9], &[0.2, 0.9]) - 1.0).abs() < 1e-14);
        let (a, b) = ([0.1, -0.4, 2.0], [1.1, 0.3, -0.5]);
        assert!((swap_kernel(&a, &b) - inversion_kernel(&a, &b)).abs() < 1e-12);
        // RX(0)|0⟩ and RX(π)|0⟩ are orthogonal.
        let spec = EmbeddingSpec::new(1);
        let s = run_tape(&kernel_tape_swap(&[0.0], &[PI], &spec).unwrap(), &[]).unwrap();
        let p0 = 1.0 - s.probability_of_one(0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-14);
        assert!(swap_kernel(&[0.0], &[PI]).abs() < 1e-14);
    }

    #[test]
    fn variational_tape_scores() {
        let emb = EmbeddingSpec::new(1);
        let ansatz = AnsatzSpec::new(1, 1).unwrap();
        let tape = variational_tape(&[0.0], &emb, &ansatz).unwrap();
        for beta in [0.0, 0.4, 1.7, -2.2] {
            let z = expectation_z(&run_tape(&tape, &[0.0, beta, 0.0]).unwrap(), 0).unwrap();
            assert!((z - beta.cos()).abs() < 1e-14);
        }
        let emb4 = EmbeddingSpec::new(4);
        let a4 = AnsatzSpec::new(2, 4).unwrap();
        let tape = variational_tape(&[0.0; 4], &emb4, &a4).unwrap();
        let z = expectation_z(&run_tape(&tape, &[0.0; 24]).unwrap(), 0).unwrap();
        assert!((z - 1.0).abs() < 1e-14);
        assert!(matches!(
            variational_tape(&[0.0; 3], &EmbeddingSpec::new(3), &a4),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn hybrid_tape_structure() {
        let emb = EmbeddingSpec::new(3);
        let ansatz = AnsatzSpec::new(2, 3).unwrap();
        let tape = hybrid_kernel_tape(&[0.1, 0.2, 0.3], &[0.3, 0.2, 0.1], &emb, &ansatz).unwrap();
        assert_eq!(tape.n_params(), ansatz.n_params());
        assert_eq!(tape.n_slot_occurrences(), 2 * ansatz.n_params());
        let theta: Vec<f64> = (0..18).map(|i| 0.1 * i as f64 - 0.7).collect();
        let same = hybrid_kernel_tape(&[0.5, -0.2, 1.0], &[0.5, -0.2, 1.0], &emb, &ansatz).unwrap();
        assert!((prob_all_zero(&run_tape(&same, &theta).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hybrid_kernel_depends_on_theta() {
        let emb = EmbeddingSpec::new(2);
        let ansatz = AnsatzSpec::new(1, 2).unwrap();
        let tape = hybrid_kernel_tape(&[0.3, 1.1], &[-0.4, 0.2], &emb, &ansatz).unwrap();
        let k0 = prob_all_zero(&run_tape(&tape, &[0.0; 6]).unwrap());
        let k1 = prob_all_zero(&run_tape(&tape, &[0.0, 1.0, 0.0, 0.5, 0.7, 0.0]).unwrap());
        assert!((k0 - k1).abs() > 1e-3);
    }
}
