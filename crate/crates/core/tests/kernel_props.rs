mod common;

use std::f64::consts::PI;

use common::{iris_split, random_params};
use proptest::prelude::*;
use qsvm_lab::circuits::{hybrid_kernel_tape, variational_tape, AnsatzSpec, EmbeddingSpec};
use qsvm_lab::kernels::{eval_kernel, gram_matrix, min_eigenvalue, GramMatrix, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(r: &mut ChaCha8Rng, f: usize) -> Vec<f64> {
    (0..f).map(|_| r.random_range(-PI..PI)).collect()
}

fn closed_form(x1: &[f64], x2: &[f64]) -> f64 {
    x1.iter()
        .zip(x2)
        .map(|(a, b)| ((a - b) / 2.0).cos().powi(2))
        .product()
}

fn trainable(f: usize, layers: usize, theta: Vec<f64>) -> KernelSpec {
    KernelSpec::QuantumTrainable {
        embedding: EmbeddingSpec::new(f),
        ansatz: AnsatzSpec::new(layers, f).unwrap(),
        theta,
    }
}

fn all_kinds(f: usize, r: &mut ChaCha8Rng) -> Vec<KernelSpec> {
    let emb = EmbeddingSpec::new(f);
    let theta = random_params(r, 3 * 2 * f);
    vec![
        KernelSpec::QuantumInversion { embedding: emb },
        KernelSpec::QuantumSwap { embedding: emb },
        trainable(f, 2, theta),
        KernelSpec::Linear,
        KernelSpec::PolyHomogeneous { degree: 3 },
        KernelSpec::PolyInhomogeneous { degree: 2, r: 0.5 },
        KernelSpec::Rbf { gamma: 0.7 },
        KernelSpec::Sigmoid {
            k: 0.3,
            c: -0.1,
            exponent: 1,
        },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_kernel_is_symmetric(seed in any::<u64>(), f in 1usize..=4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (point(&mut r, f), point(&mut r, f));
        for spec in all_kinds(f, &mut r) {
            let ab = eval_kernel(&a, &b, &spec).unwrap();
            let ba = eval_kernel(&b, &a, &spec).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-10, "{}: {} vs {}", spec.name(), ab, ba);
        }
    }

    #[test]
    fn quantum_kernels_are_bounded_overlaps(seed in any::<u64>(), f in 1usize..=4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (point(&mut r, f), point(&mut r, f));
        for spec in all_kinds(f, &mut r).into_iter().filter(KernelSpec::is_quantum) {
            let k = eval_kernel(&a, &b, &spec).unwrap();
            let kaa = eval_kernel(&a, &a, &spec).unwrap();
            let kbb = eval_kernel(&b, &b, &spec).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
            prop_assert!((kaa - 1.0).abs() <= 1e-10 && (kbb - 1.0).abs() <= 1e-10);
            prop_assert!(k * k <= kaa * kbb + 1e-12);
        }
    }

    #[test]
    fn inversion_matches_product_of_cosines(seed in any::<u64>(), f in 1usize..=4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (point(&mut r, f), point(&mut r, f));
        let spec = KernelSpec::QuantumInversion { embedding: EmbeddingSpec::new(f) };
        prop_assert!((eval_kernel(&a, &b, &spec).unwrap() - closed_form(&a, &b)).abs() <= 1e-10);
    }

    #[test]
    fn swap_test_matches_inversion(seed in any::<u64>(), f in 1usize..=4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (point(&mut r, f), point(&mut r, f));
        let emb = EmbeddingSpec::new(f);
        let inv = eval_kernel(&a, &b, &KernelSpec::QuantumInversion { embedding: emb }).unwrap();
        let swap = eval_kernel(&a, &b, &KernelSpec::QuantumSwap { embedding: emb }).unwrap();
        prop_assert!((inv - swap).abs() <= 1e-10);
    }

    #[test]
    fn trainable_kernel_at_zero_is_the_plain_kernel(seed in any::<u64>(), f in 1usize..=4, layers in 1usize..=3) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (point(&mut r, f), point(&mut r, f));
        let plain = eval_kernel(&a, &b, &KernelSpec::QuantumInversion { embedding: EmbeddingSpec::new(f) }).unwrap();
        let zero = eval_kernel(&a, &b, &trainable(f, layers, vec![0.0; 3 * layers * f])).unwrap();
        prop_assert!((plain - zero).abs() <= 1e-10);
    }
}

#[test]
fn hybrid_tape_counts_each_angle_twice() {
    for (layers, n) in [(1, 1), (2, 4), (3, 3)] {
        let ansatz = AnsatzSpec::new(layers, n).unwrap();
        let emb = EmbeddingSpec::new(n);
        let x = vec![0.1; n];
        let tape = hybrid_kernel_tape(&x, &x, &emb, &ansatz).unwrap();
        assert_eq!(tape.n_params(), 3 * layers * n);
        assert_eq!(tape.n_slot_occurrences(), 2 * 3 * layers * n);
        let var = variational_tape(&x, &emb, &ansatz).unwrap();
        assert_eq!(var.n_slot_occurrences(), 3 * layers * n);
    }
}

#[test]
fn trainable_kernel_moves_with_theta() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let (a, b) = (point(&mut r, 4), point(&mut r, 4));
    let k0 = eval_kernel(&a, &b, &trainable(4, 2, vec![0.0; 24])).unwrap();
    let k1 = eval_kernel(&a, &b, &trainable(4, 2, random_params(&mut r, 24))).unwrap();
    assert!((k0 - k1).abs() > 1e-3, "{k0} vs {k1}");
}

fn assert_valid_gram(g: &GramMatrix, quantum: bool) {
    assert!(g.symmetry_residual() <= 1e-10);
    for i in 0..g.size() {
        if quantum {
            assert!((g.get(i, i) - 1.0).abs() <= 1e-10);
            assert!(g.row(i).iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
    let lam = min_eigenvalue(g).unwrap();
    assert!(lam >= -1e-8, "min eigenvalue {lam}");
}

#[test]
fn gram_matrices_are_psd() {
    let (train, _) = iris_split(42);
    let rows = &train.features[..20];
    let emb = EmbeddingSpec::new(4);
    assert_valid_gram(
        &gram_matrix(rows, &KernelSpec::QuantumInversion { embedding: emb }).unwrap(),
        true,
    );
    assert_valid_gram(
        &gram_matrix(&rows[..10], &KernelSpec::QuantumSwap { embedding: emb }).unwrap(),
        true,
    );
    assert_valid_gram(
        &gram_matrix(rows, &KernelSpec::Rbf { gamma: 0.5 }).unwrap(),
        false,
    );
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let spec = trainable(4, 2, random_params(&mut r, 24));
        assert_valid_gram(&gram_matrix(rows, &spec).unwrap(), true);
    }
}

#[test]
fn duplicate_rows_give_identical_gram_rows() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut xs: Vec<Vec<f64>> = (0..5).map(|_| point(&mut r, 3)).collect();
    xs.push(xs[1].clone());
    for spec in all_kinds(3, &mut r) {
        let g = gram_matrix(&xs, &spec).unwrap();
        assert_eq!(g.row(1), g.row(5), "{}", spec.name());
    }
}

#[test]
fn kernel_errors_name_the_entry() {
    let xs = vec![vec![0.1, 0.2], vec![0.3]];
    let err = gram_matrix(&xs, &KernelSpec::Linear)
        .unwrap_err()
        .to_string();
    assert!(err.contains("(0, 1)"), "{err}");
}
