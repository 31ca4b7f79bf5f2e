mod common;

use std::f64::consts::PI;

use common::{max_abs_diff, random_params, random_rotation_tape};
use qsvm_lab::autodiff::{
    expectation, finite_diff_gradient, param_shift_gradient, Observable, DEFAULT_FD_STEP,
};
use qsvm_lab::circuits::{hybrid_kernel_tape, variational_tape, AnsatzSpec, EmbeddingSpec};
use qsvm_lab::sim::CircuitTape;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fd(tape: &CircuitTape, theta: &[f64], obs: Observable) -> Vec<f64> {
    finite_diff_gradient(
        |p| expectation(tape, p, obs).unwrap(),
        theta,
        DEFAULT_FD_STEP,
    )
}

fn point(r: &mut ChaCha8Rng, f: usize) -> Vec<f64> {
    (0..f).map(|_| r.random_range(-PI..PI)).collect()
}

#[test]
fn shift_rule_matches_finite_differences_on_random_tapes() {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..30 {
        let n = r.random_range(1..=4);
        let n_params = r.random_range(1..=6);
        let depth = r.random_range(1..=20);
        let tape = random_rotation_tape(&mut r, n, depth, n_params);
        let theta = random_params(&mut r, n_params);
        for obs in [Observable::PauliZ(0), Observable::AllZeroProjector] {
            let ps = param_shift_gradient(&tape, &theta, obs).unwrap();
            let diff = max_abs_diff(&ps, &fd(&tape, &theta, obs));
            assert!(diff <= 1e-6, "case {case} {obs:?}: {diff}");
        }
    }
}

#[test]
fn shift_rule_matches_finite_differences_on_model_tapes() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let n = r.random_range(1..=4);
        let layers = r.random_range(1..=3);
        let ansatz = AnsatzSpec::new(layers, n).unwrap();
        let emb = EmbeddingSpec::new(n);
        let theta = random_params(&mut r, ansatz.n_params());
        let (x1, x2) = (point(&mut r, n), point(&mut r, n));
        let hybrid = hybrid_kernel_tape(&x1, &x2, &emb, &ansatz).unwrap();
        let ps = param_shift_gradient(&hybrid, &theta, Observable::AllZeroProjector).unwrap();
        let diff = max_abs_diff(&ps, &fd(&hybrid, &theta, Observable::AllZeroProjector));
        assert!(diff <= 1e-6, "hybrid case {case}: {diff}");

        let var = variational_tape(&x1, &emb, &ansatz).unwrap();
        let ps = param_shift_gradient(&var, &theta, Observable::PauliZ(0)).unwrap();
        let diff = max_abs_diff(&ps, &fd(&var, &theta, Observable::PauliZ(0)));
        assert!(diff <= 1e-6, "variational case {case}: {diff}");
    }
}

#[test]
fn hybrid_gradient_is_symmetric_in_the_pair() {
    let mut r = ChaCha8Rng::seed_from_u64(99);
    let ansatz = AnsatzSpec::new(2, 3).unwrap();
    let emb = EmbeddingSpec::new(3);
    for _ in 0..10 {
        let theta = random_params(&mut r, ansatz.n_params());
        let (x1, x2) = (point(&mut r, 3), point(&mut r, 3));
        let g12 = param_shift_gradient(
            &hybrid_kernel_tape(&x1, &x2, &emb, &ansatz).unwrap(),
            &theta,
            Observable::AllZeroProjector,
        )
        .unwrap();
        let g21 = param_shift_gradient(
            &hybrid_kernel_tape(&x2, &x1, &emb, &ansatz).unwrap(),
            &theta,
            Observable::AllZeroProjector,
        )
        .unwrap();
        assert!(max_abs_diff(&g12, &g21) <= 1e-10);
    }
}

#[test]
fn hybrid_gradient_vanishes_on_the_diagonal() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let ansatz = AnsatzSpec::new(2, 4).unwrap();
    let emb = EmbeddingSpec::new(4);
    let theta = random_params(&mut r, ansatz.n_params());
    let x = point(&mut r, 4);
    let g = param_shift_gradient(
        &hybrid_kernel_tape(&x, &x, &emb, &ansatz).unwrap(),
        &theta,
        Observable::AllZeroProjector,
    )
    .unwrap();
    assert!(g.iter().all(|v| v.abs() <= 1e-10), "{g:?}");
}

#[test]
fn finite_differences_of_simple_functions() {
    let g = finite_diff_gradient(|p| p[0].cos(), &[PI / 3.0], DEFAULT_FD_STEP);
    assert!((g[0] + (PI / 3.0).sin()).abs() <= 1e-6);
    let g = finite_diff_gradient(|_| 4.0, &[0.3, -1.0], DEFAULT_FD_STEP);
    assert_eq!(g, vec![0.0, 0.0]);
}
