//! Independent dense-matrix oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qadbench_core::statevector::{GateKind, GateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (na, nb) = (a.len(), b.len());
    (0..na * nb)
        .map(|i| {
            (0..na * nb)
                .map(|j| a[i / nb][j / nb] * b[i % nb][j % nb])
                .collect()
        })
        .collect()
}

pub fn scale(a: &CMat, s: Complex64) -> CMat {
    a.iter()
        .map(|r| r.iter().map(|v| v * s).collect())
        .collect()
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

/// Truncated Taylor series of `exp(A)`; adequate for `‖A‖ <= ~10`.
pub fn expm(a: &CMat) -> CMat {
    let n = a.len();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..60 {
        term = scale(&matmul(&term, a), c(1.0 / k as f64, 0.0));
        result = add(&result, &term);
    }
    result
}

pub fn pauli(p: char) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        'I' => vec![vec![o, z], vec![z, o]],
        'X' => vec![vec![z, o], vec![o, z]],
        'Y' => vec![vec![z, -i], vec![i, z]],
        'Z' => vec![vec![o, z], vec![z, -o]],
        _ => unreachable!(),
    }
}

/// Dense `exp(-iθP/2)` for the gate's Pauli string on an `n`-qubit register,
/// qubit 0 being the leftmost tensor factor.
pub fn gate_matrix(gate: &GateOp, n: usize) -> CMat {
    let letter = match gate.kind {
        GateKind::Rx => 'X',
        GateKind::Ry => 'Y',
        GateKind::Rz => 'Z',
        GateKind::Ryy => 'Y',
        GateKind::Rzz => 'Z',
    };
    let mut p = vec![vec![c(1.0, 0.0)]];
    for q in 0..n {
        let f = if gate.targets.contains(&q) {
            letter
        } else {
            'I'
        };
        p = kron(&p, &pauli(f));
    }
    expm(&scale(&p, c(0.0, -gate.angle / 2.0)))
}

pub fn apply_dense(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `U|0…0⟩` built by multiplying dense gate matrices.
pub fn dense_run(gates: &[GateOp], n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    for g in gates {
        v = apply_dense(&gate_matrix(g, n), &v);
    }
    v
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| random_vec(rng, d)).collect()
}

pub fn random_amplitudes(rng: &mut ChaCha8Rng, n_qubits: usize) -> Vec<Complex64> {
    (0..1 << n_qubits)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Projects `z` onto `{0 <= z <= c, Σ z[..n] - Σ z[n..] = 0}` by bisection on
/// the multiplier of the equality constraint.
pub fn project(z: &[f64], n: usize, c: f64) -> Vec<f64> {
    let sign = |i: usize| if i < n { 1.0 } else { -1.0 };
    let shifted = |lam: f64| -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| (v - lam * sign(i)).clamp(0.0, c))
            .collect()
    };
    let balance = |v: &[f64]| v.iter().enumerate().map(|(i, x)| sign(i) * x).sum::<f64>();
    let span = z.iter().fold(0.0f64, |m, v| m.max(v.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&shifted(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shifted(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the split `(α, α*)` dual.
pub fn qp_oracle(k: &DMatrix<f64>, y: &[f64], c: f64, eps: f64) -> f64 {
    let n = y.len();
    let lmax = k
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(*v));
    let step = 1.0 / (2.0 * lmax + 1e-12);
    let value = |z: &[f64]| -> f64 {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let kb = k * DMatrix::from_column_slice(n, 1, &beta);
        let quad: f64 = (0..n).map(|i| beta[i] * kb[i]).sum();
        let lin: f64 = (0..n).map(|i| beta[i] * y[i]).sum();
        -eps * z.iter().sum::<f64>() + lin - 0.5 * quad
    };
    let grad = |z: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let kb = k * DMatrix::from_column_slice(n, 1, &beta);
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            g[i] = -eps + y[i] - kb[i];
            g[n + i] = -eps - y[i] + kb[i];
        }
        g
    };
    let mut x = vec![0.0; 2 * n];
    let mut v = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let g = grad(&v);
        let ascent: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a + step * b).collect();
        let next = project(&ascent, n, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / t_next;
        v = next.iter().zip(&x).map(|(a, b)| a + w * (a - b)).collect();
        if value(&v) < value(&next) {
            v = next.clone();
        }
        x = next;
        t = t_next;
    }
    value(&x)
}
