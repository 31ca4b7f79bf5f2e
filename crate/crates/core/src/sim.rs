//! Dense statevector simulator.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so on three
//! qubits `|100⟩` is index 4. Every gate acts in place on an exclusively
//! borrowed [`StateVector`]; there is no global state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 24;

/// Tolerance for "the state is normalized".
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0...0⟩` on `n_qubits` qubits.
pub fn init_state(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps explicit amplitudes. The length must be a power of two and the
    /// vector must be normalized within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::config(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::config(format!(
                "state is not normalized (norm² = {norm})"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that measuring `wire` yields 1.
    pub fn probability_of_one(&self, wire: usize) -> Result<f64> {
        let mask = self.wire_mask(wire)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn wire_mask(&self, wire: usize) -> Result<usize> {
        if wire >= self.n_qubits {
            return Err(Error::circuit(format!(
                "wire {wire} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(1 << (self.n_qubits - 1 - wire))
    }

    fn apply_single(&mut self, wire: usize, m: &Mat2) {
        let stride = 1 << (self.n_qubits - 1 - wire);
        for base in (0..self.amplitudes.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + stride];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1 << (self.n_qubits - 1 - control);
        let tmask = 1 << (self.n_qubits - 1 - target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    fn apply_cswap(&mut self, control: usize, a: usize, b: usize) {
        let cmask = 1 << (self.n_qubits - 1 - control);
        let amask = 1 << (self.n_qubits - 1 - a);
        let bmask = 1 << (self.n_qubits - 1 - b);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & amask != 0 && i & bmask == 0 {
                self.amplitudes.swap(i, (i & !amask) | bmask);
            }
        }
    }
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::config(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rx_matrix(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

fn ry_matrix(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

fn rz_matrix(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
}

/// RZ(gamma) · RY(beta) · RZ(alpha): alpha acts first.
fn rot3_matrix(alpha: f64, beta: f64, gamma: f64) -> Mat2 {
    matmul(
        &rz_matrix(gamma),
        &matmul(&ry_matrix(beta), &rz_matrix(alpha)),
    )
}

fn hadamard_matrix() -> Mat2 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    /// ZYZ Euler rotation with angles (alpha, beta, gamma).
    Rot3,
    H,
    Cnot,
    /// Controlled swap; wires are (control, a, b).
    Cswap,
}

impl GateKind {
    pub fn n_wires(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rot3 | GateKind::H => 1,
            GateKind::Cnot => 2,
            GateKind::Cswap => 3,
        }
    }

    pub fn n_angles(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::Rot3 => 3,
            GateKind::H | GateKind::Cnot | GateKind::Cswap => 0,
        }
    }

    /// Each angle of the gate enters through `exp(-i·angle·P/2)` for a Pauli `P`,
    /// so the two-term parameter-shift rule applies.
    pub fn is_shiftable(self) -> bool {
        self.n_angles() > 0
    }
}

/// One angle of a gate: a constant, or a reference into the bound parameter
/// vector (possibly negated, as produced by taking an adjoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Fixed(f64),
    Slot { index: usize, negated: bool },
}

impl Angle {
    pub fn slot(index: usize) -> Self {
        Angle::Slot {
            index,
            negated: false,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Angle::Fixed(v) => Angle::Fixed(-v),
            Angle::Slot { index, negated } => Angle::Slot {
                index,
                negated: !negated,
            },
        }
    }

    /// Resolves against `params`. Slot bounds are checked when the tape is built.
    pub fn resolve(self, params: &[f64]) -> f64 {
        match self {
            Angle::Fixed(v) => v,
            Angle::Slot { index, negated } => {
                if negated {
                    -params[index]
                } else {
                    params[index]
                }
            }
        }
    }

    /// `d(resolved angle) / d(params[index])`, or `None` for constants.
    pub fn slot_derivative(self) -> Option<(usize, f64)> {
        match self {
            Angle::Fixed(_) => None,
            Angle::Slot { index, negated } => Some((index, if negated { -1.0 } else { 1.0 })),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    kind: GateKind,
    wires: Vec<usize>,
    angles: Vec<Angle>,
}

impl Gate {
    pub fn new(kind: GateKind, wires: Vec<usize>, angles: Vec<Angle>) -> Result<Self> {
        if wires.len() != kind.n_wires() {
            return Err(Error::circuit(format!(
                "{kind:?} acts on {} wires, got {}",
                kind.n_wires(),
                wires.len()
            )));
        }
        if angles.len() != kind.n_angles() {
            return Err(Error::circuit(format!(
                "{kind:?} takes {} angles, got {}",
                kind.n_angles(),
                angles.len()
            )));
        }
        for (i, w) in wires.iter().enumerate() {
            if wires[..i].contains(w) {
                return Err(Error::circuit(format!("{kind:?} repeats wire {w}")));
            }
        }
        Ok(Self {
            kind,
            wires,
            angles,
        })
    }

    pub fn rx(wire: usize, angle: Angle) -> Self {
        Self::single(GateKind::Rx, wire, vec![angle])
    }

    pub fn ry(wire: usize, angle: Angle) -> Self {
        Self::single(GateKind::Ry, wire, vec![angle])
    }

    pub fn rz(wire: usize, angle: Angle) -> Self {
        Self::single(GateKind::Rz, wire, vec![angle])
    }

    pub fn rot3(wire: usize, alpha: Angle, beta: Angle, gamma: Angle) -> Self {
        Self::single(GateKind::Rot3, wire, vec![alpha, beta, gamma])
    }

    pub fn h(wire: usize) -> Self {
        Self::single(GateKind::H, wire, Vec::new())
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::new(GateKind::Cnot, vec![control, target], Vec::new())
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Result<Self> {
        Self::new(GateKind::Cswap, vec![control, a, b], Vec::new())
    }

    fn single(kind: GateKind, wire: usize, angles: Vec<Angle>) -> Self {
        Self {
            kind,
            wires: vec![wire],
            angles,
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    /// The inverse gate. Rotations negate their angles; ROT3 additionally
    /// reverses the Euler order. H, CNOT and CSWAP are self-inverse.
    pub fn adjoint(&self) -> Self {
        let angles = match self.kind {
            GateKind::Rot3 => self.angles.iter().rev().map(|a| a.negate()).collect(),
            _ => self.angles.iter().map(|a| a.negate()).collect(),
        };
        Self {
            kind: self.kind,
            wires: self.wires.clone(),
            angles,
        }
    }
}

/// Applies `gate` with its angles resolved against `params`.
pub fn apply_gate(state: &mut StateVector, gate: &Gate, params: &[f64]) -> Result<()> {
    for &w in &gate.wires {
        state.wire_mask(w)?;
    }
    for angle in &gate.angles {
        if let Some((index, _)) = angle.slot_derivative() {
            if index >= params.len() {
                return Err(Error::circuit(format!(
                    "parameter slot {index} out of range for {} parameters",
                    params.len()
                )));
            }
        }
    }
    apply_resolved(state, gate, params, None);
    Ok(())
}

/// Applies a gate whose wires and slots were validated when its tape was
/// built. `shift` adds `delta` to the resolved angle at position `angle_idx`.
pub(crate) fn apply_resolved(
    state: &mut StateVector,
    gate: &Gate,
    params: &[f64],
    shift: Option<(usize, f64)>,
) {
    let angle = |k: usize| {
        let v = gate.angles[k].resolve(params);
        match shift {
            Some((idx, delta)) if idx == k => v + delta,
            _ => v,
        }
    };
    let w = &gate.wires;
    match gate.kind {
        GateKind::Rx => state.apply_single(w[0], &rx_matrix(angle(0))),
        GateKind::Ry => state.apply_single(w[0], &ry_matrix(angle(0))),
        GateKind::Rz => state.apply_single(w[0], &rz_matrix(angle(0))),
        GateKind::Rot3 => state.apply_single(w[0], &rot3_matrix(angle(0), angle(1), angle(2))),
        GateKind::H => state.apply_single(w[0], &hadamard_matrix()),
        GateKind::Cnot => state.apply_cnot(w[0], w[1]),
        GateKind::Cswap => state.apply_cswap(w[0], w[1], w[2]),
    }
}

/// An ordered gate list over a fixed register, bound to a parameter vector
/// of length `n_params` at execution time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitTape {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl CircuitTape {
    pub fn new(n_qubits: usize, n_params: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        Ok(Self {
            n_qubits,
            n_params,
            gates: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&w) = gate.wires.iter().find(|&&w| w >= self.n_qubits) {
            return Err(Error::circuit(format!(
                "wire {w} out of range for {} qubits",
                self.n_qubits
            )));
        }
        for angle in &gate.angles {
            if let Some((index, _)) = angle.slot_derivative() {
                if index >= self.n_params {
                    return Err(Error::circuit(format!(
                        "parameter slot {index} out of range for {} parameters",
                        self.n_params
                    )));
                }
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`, which must act on the same register.
    /// The parameter vector grows to cover both tapes.
    pub fn extend(&mut self, other: &CircuitTape) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::circuit(format!(
                "cannot join a {}-qubit tape onto a {}-qubit tape",
                other.n_qubits, self.n_qubits
            )));
        }
        self.n_params = self.n_params.max(other.n_params);
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// Gate order reversed, every gate inverted.
    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Number of angle positions bound to a parameter slot.
    pub fn n_slot_occurrences(&self) -> usize {
        self.gates
            .iter()
            .flat_map(|g| g.angles.iter())
            .filter(|a| a.slot_derivative().is_some())
            .count()
    }
}

pub fn adjoint_tape(tape: &CircuitTape) -> CircuitTape {
    tape.adjoint()
}

pub fn apply_tape(state: &mut StateVector, tape: &CircuitTape, params: &[f64]) -> Result<()> {
    check_binding(state, tape, params)?;
    for gate in &tape.gates {
        apply_resolved(state, gate, params, None);
    }
    Ok(())
}

pub(crate) fn check_binding(state: &StateVector, tape: &CircuitTape, params: &[f64]) -> Result<()> {
    if params.len() != tape.n_params {
        return Err(Error::circuit(format!(
            "tape expects {} parameters, got {}",
            tape.n_params,
            params.len()
        )));
    }
    if state.n_qubits != tape.n_qubits {
        return Err(Error::circuit(format!(
            "tape acts on {} qubits, state has {}",
            tape.n_qubits, state.n_qubits
        )));
    }
    Ok(())
}

/// Runs `tape` on `|0...0⟩`.
pub fn run_tape(tape: &CircuitTape, params: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(tape.n_qubits)?;
    apply_tape(&mut state, tape, params)?;
    Ok(state)
}

/// ⟨Z⟩ on `wire`.
pub fn expectation_z(state: &StateVector, wire: usize) -> Result<f64> {
    let mask = state.wire_mask(wire)?;
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if i & mask == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum())
}

/// Probability of the all-zero outcome, `|⟨0...0|ψ⟩|²`.
pub fn prob_all_zero(state: &StateVector) -> f64 {
    state.amplitudes[0].norm_sqr()
}
