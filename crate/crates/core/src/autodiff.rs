//! Parameter-shift gradients for tape expectation values, plus a central
//! finite-difference routine used as an independent check.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{self, CircuitTape, StateVector};

/// What is measured at the end of a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// ⟨Z⟩ on the given wire.
    PauliZ(usize),
    /// Projector onto `|0...0⟩`.
    AllZeroProjector,
}

impl Observable {
    pub fn measure(self, state: &StateVector) -> Result<f64> {
        match self {
            Observable::PauliZ(wire) => sim::expectation_z(state, wire),
            Observable::AllZeroProjector => Ok(sim::prob_all_zero(state)),
        }
    }
}

pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Runs `tape` from `|0...0⟩` and measures `observable`.
pub fn expectation(tape: &CircuitTape, params: &[f64], observable: Observable) -> Result<f64> {
    let state = sim::run_tape(tape, params)?;
    observable.measure(&state)
}

/// Exact gradient of `expectation(tape, θ, observable)` with respect to θ.
///
/// Each occurrence of a parameter is shifted on its own by ±π/2 and the
/// contributions are summed, scaled by the occurrence's sign (negated slots
/// come from adjoint halves). Prefix states are reused so each shifted run
/// only replays the tape suffix.
pub fn param_shift_gradient(
    tape: &CircuitTape,
    params: &[f64],
    observable: Observable,
) -> Result<Vec<f64>> {
    let mut prefix = StateVector::zero(tape.n_qubits())?;
    sim::check_binding(&prefix, tape, params)?;
    for gate in tape.gates() {
        let trainable = gate.angles().iter().any(|a| a.slot_derivative().is_some());
        if trainable && !gate.kind().is_shiftable() {
            return Err(Error::UnsupportedGate(format!(
                "{:?} has no two-term shift rule",
                gate.kind()
            )));
        }
    }
    // Validate the observable once up front.
    observable.measure(&prefix)?;

    let gates = tape.gates();
    let mut grad = vec![0.0; tape.n_params()];
    for (g, gate) in gates.iter().enumerate() {
        for (k, angle) in gate.angles().iter().enumerate() {
            let Some((slot, sign)) = angle.slot_derivative() else {
                continue;
            };
            let shifted = |delta: f64| -> Result<f64> {
                let mut state = prefix.clone();
                sim::apply_resolved(&mut state, gate, params, Some((k, delta)));
                for rest in &gates[g + 1..] {
                    sim::apply_resolved(&mut state, rest, params, None);
                }
                observable.measure(&state)
            };
            let plus = shifted(FRAC_PI_2)?;
            let minus = shifted(-FRAC_PI_2)?;
            grad[slot] += sign * 0.5 * (plus - minus);
        }
        sim::apply_resolved(&mut prefix, gate, params, None);
    }
    Ok(grad)
}

/// Central differences `(f(θ + h·e_j) - f(θ - h·e_j)) / 2h`.
pub fn finite_diff_gradient<F>(f: F, params: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|j| {
            probe[j] = params[j] + step;
            let up = f(&probe);
            probe[j] = params[j] - step;
            let down = f(&probe);
            probe[j] = params[j];
            (up - down) / (2.0 * step)
        })
        .collect()
}
