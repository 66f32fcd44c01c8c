mod common;

use common::*;
use qadbench_core::kernel::EncodingSpec;
use qadbench_core::qae::{
    mean_loss, qae_gradient, qae_loss, train_qae, trainable_layer, QaeConfig,
};
use qadbench_core::statevector::{Circuit, GateOp, StateVector};
use qadbench_core::Detector;
use rand::Rng;

fn random_params(r: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    (0..20)
        .map(|_| r.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// Expected trash weight from the full dense distribution.
fn oracle_loss(params: &[f64], x: &[f64]) -> f64 {
    let spec = EncodingSpec::default();
    let mut gates = spec.circuit(x).unwrap().gates;
    gates.extend(trainable_layer(params, 5).gates);
    let amps = dense_run(&gates, 5);
    amps.iter()
        .enumerate()
        .map(|(i, a)| {
            let bit3 = (i >> 1) & 1;
            let bit4 = i & 1;
            (bit3 + bit4) as f64 * a.norm_sqr()
        })
        .sum()
}

#[test]
fn twenty_parameters_for_five_qubits() {
    let cfg = QaeConfig::default();
    assert_eq!(cfg.param_count(), 20);
    let init = cfg.initial_params();
    assert_eq!(init.len(), 20);
    assert!(init.iter().all(|p| p.abs() <= 0.01));
    assert_eq!(trainable_layer(&init, 5).len(), 20);
}

#[test]
fn loss_matches_dense_enumeration_and_is_bounded() {
    let mut r = rng(21);
    let cfg = QaeConfig::default();
    for _ in 0..8 {
        let p = random_params(&mut r);
        let x = random_vec(&mut r, 5);
        let loss = qae_loss(&p, &x, &cfg).unwrap();
        assert!((0.0..=2.0).contains(&loss));
        assert!((loss - oracle_loss(&p, &x)).abs() < 1e-10);
    }
}

#[test]
fn parameter_shift_agrees_with_central_difference() {
    let mut r = rng(22);
    let cfg = QaeConfig::default();
    let h = 1e-4;
    for _ in 0..20 {
        let p = random_params(&mut r);
        let x = random_vec(&mut r, 5);
        let g = qae_gradient(&p, &x, &cfg).unwrap();
        for k in 0..20 {
            let mut plus = p.clone();
            plus[k] += h;
            let mut minus = p.clone();
            minus[k] -= h;
            let fd = (qae_loss(&plus, &x, &cfg).unwrap() - qae_loss(&minus, &x, &cfg).unwrap())
                / (2.0 * h);
            assert!((g[k] - fd).abs() <= 1e-5, "component {k}: {} vs {fd}", g[k]);
        }
    }
}

#[test]
fn parameter_shift_agrees_with_fourth_order_difference() {
    let mut r = rng(23);
    let cfg = QaeConfig::default();
    let h = 1e-3;
    for _ in 0..20 {
        let p = random_params(&mut r);
        let x = random_vec(&mut r, 5);
        let g = qae_gradient(&p, &x, &cfg).unwrap();
        let at = |k: usize, d: f64| {
            let mut q = p.clone();
            q[k] += d;
            qae_loss(&q, &x, &cfg).unwrap()
        };
        for k in 0..20 {
            let fd =
                (-at(k, 2.0 * h) + 8.0 * at(k, h) - 8.0 * at(k, -h) + at(k, -2.0 * h)) / (12.0 * h);
            assert!((g[k] - fd).abs() <= 1e-7);
        }
    }
}

#[test]
fn zz_block_order_is_irrelevant() {
    let mut r = rng(24);
    let p = random_params(&mut r);
    let layer = trainable_layer(&p, 5);
    let mut reordered = Circuit::new();
    for g in &layer.gates[..10] {
        reordered.push(g.clone());
    }
    let mut zz: Vec<GateOp> = layer.gates[10..].to_vec();
    zz.reverse();
    for g in zz {
        // swapping the two targets must not matter either
        reordered.push(GateOp::rzz(g.targets[1], g.targets[0], g.angle));
    }
    let start = StateVector::from_amplitudes(random_amplitudes(&mut r, 5)).unwrap();
    let a = start.apply_circuit(&layer).unwrap();
    let b = start.apply_circuit(&reordered).unwrap();
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn training_is_deterministic_and_seed_dependent() {
    let mut r = rng(25);
    let rows = random_rows(&mut r, 10, 5);
    let cfg = QaeConfig {
        epochs: 3,
        ..QaeConfig::default()
    };
    let a = train_qae(&rows, &cfg).unwrap();
    let b = train_qae(&rows, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train_qae(&rows, &QaeConfig { seed: 9, ..cfg }).unwrap();
    assert_ne!(a.params(), c.params());
    assert_eq!(a.total_parameter_count(), 20);
    assert!((a.tau() - 3.0 * a.train_mean_loss()).abs() < 1e-12);
}

#[test]
fn training_reduces_loss_on_a_repeated_sample() {
    let mut r = rng(26);
    let x = random_vec(&mut r, 5);
    let rows = vec![x; 30];
    let cfg = QaeConfig::default();
    let before = mean_loss(&cfg.initial_params(), &rows, &cfg).unwrap();
    let model = train_qae(&rows, &cfg).unwrap();
    let after = mean_loss(model.params(), &rows, &cfg).unwrap();
    assert!(after < before, "{after} >= {before}");
}

#[test]
fn shot_loss_approximates_exact_loss() {
    let mut r = rng(27);
    let p = random_params(&mut r);
    let x = random_vec(&mut r, 5);
    let exact = qae_loss(&p, &x, &QaeConfig::default()).unwrap();
    let cfg = QaeConfig {
        shots: Some(20_000),
        ..QaeConfig::default()
    };
    let est = qae_loss(&p, &x, &cfg).unwrap();
    assert!((est - exact).abs() < 0.05);
    assert_eq!(est, qae_loss(&p, &x, &cfg).unwrap());
}

#[test]
fn invalid_configuration_is_rejected() {
    let x = vec![0.0; 5];
    let p = vec![0.0; 20];
    let bad_trash = QaeConfig {
        trash_qubits: vec![5],
        ..QaeConfig::default()
    };
    assert!(qae_loss(&p, &x, &bad_trash).is_err());
    assert!(qae_loss(&p[..19], &x, &QaeConfig::default()).is_err());
    assert!(qae_loss(&p, &x[..4], &QaeConfig::default()).is_err());
}
