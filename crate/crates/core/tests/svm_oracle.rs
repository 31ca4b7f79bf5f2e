mod common;

use common::{grid_dual_optimum, iris_split, random_blobs};
use qsvm_lab::circuits::EmbeddingSpec;
use qsvm_lab::error::Error;
use qsvm_lab::kernels::{gram_matrix, GramMatrix, KernelSpec};
use qsvm_lab::svm::{
    dual_objective, kkt_violations, sign_label, smo_train, DualSolution, SvmModel, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(c: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        c,
        seed,
        ..TrainConfig::default()
    }
}

fn dual_gap(sol: &DualSolution, labels: &[i8]) -> f64 {
    sol.alphas
        .iter()
        .zip(labels)
        .map(|(a, &y)| a * f64::from(y))
        .sum::<f64>()
        .abs()
}

fn assert_feasible(sol: &DualSolution, labels: &[i8]) {
    assert!(sol.alphas.iter().all(|&a| (0.0..=sol.c).contains(&a)));
    assert!(dual_gap(sol, labels) <= 1e-8);
}

fn kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::Linear,
        KernelSpec::Rbf { gamma: 0.5 },
        KernelSpec::QuantumInversion {
            embedding: EmbeddingSpec::new(2),
        },
    ]
}

#[test]
fn smo_matches_grid_search_on_small_sets() {
    for m in 2..=6usize {
        let n_sets = if m == 6 { 2 } else { 4 };
        for seed in 0..n_sets {
            let mut r = ChaCha8Rng::seed_from_u64(1000 * m as u64 + seed);
            let (xs, ys) = random_blobs(&mut r, m, 1.0);
            for spec in kernels() {
                let c = [0.5, 1.0, 4.0][seed as usize % 3];
                let gram = gram_matrix(&xs, &spec).unwrap();
                let sol = smo_train(&gram, &ys, &cfg(c, seed)).unwrap();
                assert_feasible(&sol, &ys);
                let smo = dual_objective(&sol.alphas, &ys, &gram);
                let oracle = grid_dual_optimum(&gram, &ys, c);
                assert!(
                    (smo - oracle).abs() <= 0.02 * c,
                    "m={m} seed={seed} {}: smo {smo} vs grid {oracle}",
                    spec.name()
                );
            }
        }
    }
}

#[test]
fn two_point_problem_has_the_analytic_solution() {
    let xs = vec![vec![1.0], vec![-1.0]];
    let ys = [1, -1];
    let model = SvmModel::fit(&xs, &ys, KernelSpec::Linear, &cfg(10.0, 42)).unwrap();
    assert!((model.alphas[0] - 0.5).abs() <= 1e-6);
    assert!((model.alphas[1] - 0.5).abs() <= 1e-6);
    assert!(model.bias.abs() <= 1e-6);
    assert!((model.decision_function(&[0.5]).unwrap() - 0.5).abs() <= 1e-6);
}

#[test]
fn separable_blobs_are_fit_exactly() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let (xs, ys) = random_blobs(&mut r, 8, 4.0);
    let model = SvmModel::fit(&xs, &ys, KernelSpec::Linear, &cfg(10.0, 1)).unwrap();
    for (x, &y) in xs.iter().zip(&ys) {
        assert_eq!(model.predict(x).unwrap(), y);
    }
}

#[test]
fn trained_models_satisfy_kkt() {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    let mut problems: Vec<(GramMatrix, Vec<i8>, f64)> = Vec::new();
    for m in [6, 12, 20] {
        let (xs, ys) = random_blobs(&mut r, m, 1.5);
        for spec in kernels() {
            problems.push((gram_matrix(&xs, &spec).unwrap(), ys.clone(), 1.0));
        }
    }
    for seed in [42, 1, 2] {
        let (train, _) = iris_split(seed);
        let spec = KernelSpec::QuantumInversion {
            embedding: EmbeddingSpec::new(4),
        };
        problems.push((
            gram_matrix(&train.features, &spec).unwrap(),
            train.labels.clone(),
            1.0,
        ));
    }
    for (k, (gram, ys, c)) in problems.iter().enumerate() {
        let sol = smo_train(gram, ys, &cfg(*c, 42)).unwrap();
        assert_feasible(&sol, ys);
        let bad = kkt_violations(&sol, ys, gram, 1e-3);
        assert!(bad.is_empty(), "problem {k}: KKT violated at {bad:?}");
    }
}

#[test]
fn free_support_vectors_sit_on_the_margin() {
    let (train, _) = iris_split(42);
    let spec = KernelSpec::QuantumInversion {
        embedding: EmbeddingSpec::new(4),
    };
    let model = SvmModel::fit(&train.features, &train.labels, spec, &cfg(1.0, 42)).unwrap();
    let mut checked = 0;
    for &i in &model.support_indices {
        if model.alphas[i] < model.c - 1e-8 {
            let f = model.decision_function(&train.features[i]).unwrap();
            assert!(
                (f64::from(train.labels[i]) * f - 1.0).abs() <= 1e-3,
                "sample {i}: {f}"
            );
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn training_is_deterministic() {
    let (train, _) = iris_split(3);
    let spec = KernelSpec::QuantumInversion {
        embedding: EmbeddingSpec::new(4),
    };
    let a = SvmModel::fit(&train.features, &train.labels, spec.clone(), &cfg(1.0, 9)).unwrap();
    let b = SvmModel::fit(&train.features, &train.labels, spec, &cfg(1.0, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trip_keeps_decisions() {
    let (train, test) = iris_split(5);
    let spec = KernelSpec::QuantumInversion {
        embedding: EmbeddingSpec::new(4),
    };
    let model = SvmModel::fit(&train.features, &train.labels, spec, &cfg(1.0, 5)).unwrap();
    let text = qsvm_lab::report::to_json_string(&model).unwrap();
    let back: SvmModel = serde_json::from_str(&text).unwrap();
    for x in &test.features {
        let (a, b) = (
            model.decision_function(x).unwrap(),
            back.decision_function(x).unwrap(),
        );
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn batched_and_single_decisions_agree() {
    let (train, test) = iris_split(6);
    let spec = KernelSpec::QuantumInversion {
        embedding: EmbeddingSpec::new(4),
    };
    let model = SvmModel::fit(&train.features, &train.labels, spec, &cfg(1.0, 6)).unwrap();
    let batch = model.decision_values(&test.features).unwrap();
    for (x, v) in test.features.iter().zip(&batch) {
        assert_eq!(model.decision_function(x).unwrap(), *v);
    }
}

#[test]
fn single_class_is_rejected() {
    let xs = vec![vec![0.0], vec![1.0]];
    let err = SvmModel::fit(&xs, &[1, 1], KernelSpec::Linear, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::DegenerateData(_)));
}

#[test]
fn indefinite_gram_only_warns() {
    let gram = GramMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    let sol = smo_train(&gram, &[1, -1], &TrainConfig::default()).unwrap();
    assert!(!sol.warnings.is_empty());
}

#[test]
fn sign_rule() {
    assert_eq!(sign_label(0.3), 1);
    assert_eq!(sign_label(-2.0), -1);
    assert_eq!(sign_label(0.0), 1);
}
