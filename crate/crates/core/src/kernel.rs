//! Fidelity kernel over an IQP-style angle encoding.
//!
//! The feature map applies `RZ(x_i)` to every qubit, then `RX` with the
//! features cyclically shifted, then `RYY(x_i·x_j)` across every qubit pair.
//! Kernel entries are `|⟨ψ(x)|ψ(z)⟩|²`, either computed exactly or estimated
//! as the all-zero frequency of `U†(x)U(z)|0…0⟩` over a number of shots.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_rows, Error, Result};
use crate::statevector::{Circuit, GateOp, StateVector, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSpec {
    n_features: usize,
    shift: usize,
}

impl EncodingSpec {
    pub fn new(n_features: usize, shift: usize) -> Result<Self> {
        if !(2..=MAX_QUBITS).contains(&n_features) {
            return Err(Error::invalid(format!(
                "encoding needs 2..={MAX_QUBITS} features, got {n_features}"
            )));
        }
        if shift == 0 || shift >= n_features {
            return Err(Error::invalid(format!(
                "feature shift must be in 1..{n_features}, got {shift}"
            )));
        }
        Ok(Self { n_features, shift })
    }

    /// Shift-by-one encoding over `n_features` qubits.
    pub fn with_features(n_features: usize) -> Result<Self> {
        Self::new(n_features, 1)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_qubits(&self) -> usize {
        self.n_features
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Number of gates in the encoding circuit: `2n + n(n-1)/2`.
    pub fn gate_count(&self) -> usize {
        let n = self.n_features;
        2 * n + n * (n - 1) / 2
    }

    pub fn circuit(&self, x: &[f64]) -> Result<Circuit> {
        check_len(self.n_features, x.len())?;
        let n = self.n_features;
        let mut c = Circuit::new();
        for (q, &v) in x.iter().enumerate() {
            c.push(GateOp::rz(q, v));
        }
        for q in 0..n {
            c.push(GateOp::rx(q, x[(q + self.shift) % n]));
        }
        for (a, b) in pairs(n) {
            c.push(GateOp::ryy(a, b, x[a] * x[b]));
        }
        Ok(c)
    }

    /// `|ψ(x)⟩ = U(x)|0…0⟩`.
    pub fn encode(&self, x: &[f64]) -> Result<StateVector> {
        self.circuit(x)?.run(self.n_qubits())
    }
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            n_features: 5,
            shift: 1,
        }
    }
}

/// All qubit pairs `(a, b)` with `a < b`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    Exact,
    Shots { count: u64, seed: u64 },
}

impl KernelMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelMode::Shots { count: 0, .. } => Err(Error::ZeroShots),
            _ => Ok(()),
        }
    }

    /// Mode for matrix entry `(i, j)`: shot modes get an independent stream.
    fn for_entry(self, i: usize, j: usize) -> KernelMode {
        match self {
            KernelMode::Exact => KernelMode::Exact,
            KernelMode::Shots { count, seed } => KernelMode::Shots {
                count,
                seed: entry_seed(seed, i as u64, j as u64),
            },
        }
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn entry_seed(seed: u64, i: u64, j: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    mix(mix(mix(seed.wrapping_add(GOLDEN)) ^ i.wrapping_add(GOLDEN)) ^ j.wrapping_add(GOLDEN))
}

/// Symmetric Gram matrix of kernel values.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix(DMatrix<f64>);

impl KernelMatrix {
    /// Wraps a square matrix, rejecting asymmetry above `1e-9`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty("kernel matrix"));
        }
        for i in 0..m.nrows() {
            for j in i + 1..m.ncols() {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > 1e-9 || diff.is_nan() {
                    return Err(Error::NotSymmetric { i, j, diff });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Ragged {
                    row,
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Fidelity kernel value between two feature vectors.
pub fn kernel_entry(xi: &[f64], xj: &[f64], spec: &EncodingSpec, mode: KernelMode) -> Result<f64> {
    mode.validate()?;
    match mode {
        KernelMode::Exact => {
            let a = spec.encode(xi)?;
            let b = spec.encode(xj)?;
            Ok(a.inner_product(&b)?.norm_sqr())
        }
        KernelMode::Shots { count, seed } => {
            let b = spec.encode(xj)?;
            shot_fidelity(&spec.circuit(xi)?.inverse(), b, count, seed)
        }
    }
}

/// Runs `inverse_left` on `right_state` and estimates the all-zero probability.
fn shot_fidelity(
    inverse_left: &Circuit,
    mut right_state: StateVector,
    count: u64,
    seed: u64,
) -> Result<f64> {
    right_state.apply_circuit_mut(inverse_left)?;
    let counts = right_state.sample_index_counts(count, seed)?;
    Ok(counts[0] as f64 / count as f64)
}

struct Encoded {
    state: StateVector,
    inverse: Circuit,
}

fn encode_all(rows: &[Vec<f64>], spec: &EncodingSpec) -> Result<Vec<Encoded>> {
    rows.par_iter()
        .map(|x| {
            let c = spec.circuit(x)?;
            Ok(Encoded {
                state: c.run(spec.n_qubits())?,
                inverse: c.inverse(),
            })
        })
        .collect()
}

fn entry(a: &Encoded, b: &Encoded, mode: KernelMode) -> Result<f64> {
    match mode {
        KernelMode::Exact => Ok(a.state.inner_product(&b.state)?.norm_sqr()),
        KernelMode::Shots { count, seed } => {
            shot_fidelity(&a.inverse, b.state.clone(), count, seed)
        }
    }
}

/// Gram matrix over `rows`. Entries with `i <= j` are computed and mirrored;
/// in exact mode the diagonal is pinned to 1.
pub fn gram_matrix(
    rows: &[Vec<f64>],
    spec: &EncodingSpec,
    mode: KernelMode,
) -> Result<KernelMatrix> {
    mode.validate()?;
    let width = check_rows(rows, "gram matrix input")?;
    check_len(spec.n_features(), width)?;
    let encoded = encode_all(rows, spec)?;
    let n = rows.len();
    let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values = upper
        .par_iter()
        .map(|&(i, j)| {
            if i == j && mode == KernelMode::Exact {
                Ok(1.0)
            } else {
                entry(&encoded[i], &encoded[j], mode.for_entry(i, j))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), v) in upper.iter().zip(values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(KernelMatrix(m))
}

/// `|a| x |b|` matrix of kernel values `K(a[r], b[c])`.
pub fn cross_kernel(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    spec: &EncodingSpec,
    mode: KernelMode,
) -> Result<DMatrix<f64>> {
    mode.validate()?;
    let wa = check_rows(a, "cross kernel left input")?;
    let wb = check_rows(b, "cross kernel right input")?;
    check_len(spec.n_features(), wa)?;
    check_len(spec.n_features(), wb)?;
    let ea = encode_all(a, spec)?;
    let eb = encode_all(b, spec)?;
    let cols = b.len();
    let values = (0..a.len() * cols)
        .into_par_iter()
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            entry(&ea[r], &eb[c], mode.for_entry(r, c))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DMatrix::from_row_slice(a.len(), cols, &values))
}

/// Writes a square matrix as headerless CSV, row-major, 17 significant digits.
pub fn write_matrix_csv<W: std::io::Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e}", m[(i, j)]))
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
