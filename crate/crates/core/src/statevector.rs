//! Dense statevector simulation for small registers.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so the
//! bitstring of index `i` reads left to right as qubits `0, 1, ..., n-1`.
//! Rotations follow `R_P(θ) = exp(-iθP/2)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Ryy,
    Rzz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::Ryy | GateKind::Rzz => 2,
        }
    }
}

/// A Pauli rotation on one or two qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angle: f64,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>, angle: f64) -> Self {
        Self {
            kind,
            targets,
            angle,
        }
    }

    pub fn rx(q: usize, angle: f64) -> Self {
        Self::new(GateKind::Rx, vec![q], angle)
    }

    pub fn ry(q: usize, angle: f64) -> Self {
        Self::new(GateKind::Ry, vec![q], angle)
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Self::new(GateKind::Rz, vec![q], angle)
    }

    pub fn ryy(a: usize, b: usize, angle: f64) -> Self {
        Self::new(GateKind::Ryy, vec![a, b], angle)
    }

    pub fn rzz(a: usize, b: usize, angle: f64) -> Self {
        Self::new(GateKind::Rzz, vec![a, b], angle)
    }

    /// The inverse rotation, `R_P(-θ)`.
    pub fn inverse(&self) -> Self {
        Self {
            kind: self.kind,
            targets: self.targets.clone(),
            angle: -self.angle,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let expected = self.kind.arity();
        if self.targets.len() != expected {
            return Err(Error::GateArity {
                kind: self.kind,
                expected,
                got: self.targets.len(),
            });
        }
        for &q in &self.targets {
            if q >= n_qubits {
                return Err(Error::QubitIndex { index: q, n_qubits });
            }
        }
        if expected == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::DuplicateQubit(self.targets[0]));
        }
        Ok(())
    }
}

/// An ordered gate sequence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub gates: Vec<GateOp>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, gate: GateOp) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, other: &Circuit) -> &mut Self {
        self.gates.extend(other.gates.iter().cloned());
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// `U†` for the unitary `U` this circuit implements.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            gates: self.gates.iter().rev().map(GateOp::inverse).collect(),
        }
    }

    /// Applies the circuit to `|0…0⟩`.
    pub fn run(&self, n_qubits: usize) -> Result<StateVector> {
        let mut state = StateVector::zero(n_qubits)?;
        state.apply_circuit_mut(self)?;
        Ok(state)
    }
}

/// Amplitudes of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let norm = amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("amplitudes have zero or non-finite norm"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Bit mask of `qubit` within a basis-state index.
    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Returns `gate` applied to this state.
    pub fn apply(&self, gate: &GateOp) -> Result<Self> {
        let mut out = self.clone();
        out.apply_mut(gate)?;
        Ok(out)
    }

    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<Self> {
        let mut out = self.clone();
        out.apply_circuit_mut(circuit)?;
        Ok(out)
    }

    pub fn apply_circuit_mut(&mut self, circuit: &Circuit) -> Result<()> {
        for gate in &circuit.gates {
            self.apply_mut(gate)?;
        }
        Ok(())
    }

    pub fn apply_mut(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let (c, s) = ((gate.angle / 2.0).cos(), (gate.angle / 2.0).sin());
        match gate.kind {
            GateKind::Rx => {
                let m = self.mask(gate.targets[0]);
                let mis = Complex64::new(0.0, -s);
                self.single_qubit(m, [[c.into(), mis], [mis, c.into()]]);
            }
            GateKind::Ry => {
                let m = self.mask(gate.targets[0]);
                self.single_qubit(m, [[c.into(), (-s).into()], [s.into(), c.into()]]);
            }
            GateKind::Rz => {
                let m = self.mask(gate.targets[0]);
                let (p0, p1) = (Complex64::new(c, -s), Complex64::new(c, s));
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= if i & m == 0 { p0 } else { p1 };
                }
            }
            GateKind::Ryy => {
                let (ma, mb) = (self.mask(gate.targets[0]), self.mask(gate.targets[1]));
                // Y⊗Y maps |00⟩↔-|11⟩ and |01⟩↔|10⟩.
                let is = Complex64::new(0.0, s);
                for i00 in 0..self.amplitudes.len() {
                    if i00 & (ma | mb) != 0 {
                        continue;
                    }
                    let (i01, i10, i11) = (i00 | mb, i00 | ma, i00 | ma | mb);
                    let (a00, a11) = (self.amplitudes[i00], self.amplitudes[i11]);
                    self.amplitudes[i00] = a00 * c + a11 * is;
                    self.amplitudes[i11] = a11 * c + a00 * is;
                    let (a01, a10) = (self.amplitudes[i01], self.amplitudes[i10]);
                    self.amplitudes[i01] = a01 * c - a10 * is;
                    self.amplitudes[i10] = a10 * c - a01 * is;
                }
            }
            GateKind::Rzz => {
                let (ma, mb) = (self.mask(gate.targets[0]), self.mask(gate.targets[1]));
                let (even, odd) = (Complex64::new(c, -s), Complex64::new(c, s));
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
                    *a *= if parity { odd } else { even };
                }
            }
        }
        Ok(())
    }

    fn single_qubit(&mut self, mask: usize, u: [[Complex64; 2]; 2]) {
        for i0 in 0..self.amplitudes.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            self.amplitudes[i0] = u[0][0] * a0 + u[0][1] * a1;
            self.amplitudes[i1] = u[1][0] * a0 + u[1][1] * a1;
        }
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn prob_all_zero(&self) -> f64 {
        self.amplitudes[0].norm_sqr()
    }

    /// `|amplitude|²` for every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    /// Marginal distribution over `qubits`; the first listed qubit is the
    /// leftmost bit of each label.
    pub fn subset_marginals(&self, qubits: &[usize]) -> Result<BitstringDistribution> {
        if qubits.is_empty() {
            return Err(Error::Empty("qubit subset"));
        }
        for (k, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(Error::QubitIndex {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
            if qubits[..k].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let mut probabilities = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probabilities[subset_index(i, &masks)] += a.norm_sqr();
        }
        Ok(BitstringDistribution {
            width: qubits.len(),
            probabilities,
        })
    }

    /// Draws `shots` measurement outcomes of the full register in the
    /// computational basis. Deterministic for a given `seed`.
    pub fn sample_counts(&self, shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
        let counts = self.sample_index_counts(shots, seed)?;
        Ok(counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (bitstring(i, self.n_qubits), c))
            .collect())
    }

    /// Per-basis-index outcome counts of `shots` samples.
    pub fn sample_index_counts(&self, shots: u64, seed: u64) -> Result<Vec<u64>> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let mut cumulative = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let total = acc;
        let last = self.amplitudes.len() - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; self.amplitudes.len()];
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            // first index whose cumulative probability exceeds u
            let idx = cumulative.partition_point(|&p| p <= u).min(last);
            counts[idx] += 1;
        }
        Ok(counts)
    }
}

fn subset_index(i: usize, masks: &[usize]) -> usize {
    masks
        .iter()
        .fold(0, |acc, &m| (acc << 1) | usize::from(i & m != 0))
}

/// Big-endian bitstring of `index` over `width` bits.
pub fn bitstring(index: usize, width: usize) -> String {
    (0..width)
        .map(|k| {
            if index >> (width - 1 - k) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Probabilities over the `2^width` bitstrings of a qubit subset, indexed by
/// the big-endian value of the label.
#[derive(Clone, Debug, PartialEq)]
pub struct BitstringDistribution {
    width: usize,
    probabilities: Vec<f64>,
}

impl BitstringDistribution {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.probabilities.len())
            .map(|i| bitstring(i, self.width))
            .collect()
    }

    /// Probability of `label`, or `None` if the label is malformed.
    pub fn get(&self, label: &str) -> Option<f64> {
        if label.len() != self.width {
            return None;
        }
        let idx = usize::from_str_radix(label, 2).ok()?;
        self.probabilities.get(idx).copied()
    }

    /// Expected number of ones in a drawn label.
    pub fn expected_hamming_weight(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| i.count_ones() as f64 * p)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| (bitstring(i, self.width), p))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    #[test]
    fn zero_state_layout() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        let s = StateVector::zero(5).unwrap();
        assert_eq!(s.amplitudes().len(), 32);
        assert_eq!(s.amplitudes()[0], ONE);
        assert_eq!(StateVector::zero(3).unwrap().prob_all_zero(), 1.0);
        assert_eq!(StateVector::zero(4).unwrap().prob_all_zero(), 1.0);
    }

    #[test]
    fn zero_state_rejects_bad_sizes() {
        assert!(matches!(StateVector::zero(0), Err(Error::QubitCount(0))));
        assert!(matches!(StateVector::zero(13), Err(Error::QubitCount(13))));
    }

    #[test]
    fn single_qubit_rotations() {
        let z = StateVector::zero(1).unwrap();
        assert_eq!(z.apply(&GateOp::rz(0, 0.7)).unwrap().prob_all_zero(), 1.0);
        let flipped = z.apply(&GateOp::rx(0, PI)).unwrap();
        assert!((flipped.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-15);
        assert!(z.inner_product(&flipped).unwrap().norm() < 1e-12);

        let half = StateVector::zero(3)
            .unwrap()
            .apply(&GateOp::rx(1, FRAC_PI_2))
            .unwrap();
        assert!((half.prob_all_zero() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gate_validation() {
        let s = StateVector::zero(3).unwrap();
        assert!(matches!(
            s.apply(&GateOp::rx(3, 0.1)),
            Err(Error::QubitIndex { index: 3, .. })
        ));
        assert!(matches!(
            s.apply(&GateOp::ryy(1, 1, 0.1)),
            Err(Error::DuplicateQubit(1))
        ));
        assert!(matches!(
            s.apply(&GateOp::new(GateKind::Rzz, vec![0], 0.1)),
            Err(Error::GateArity { .. })
        ));
    }

    #[test]
    fn marginals_use_big_endian_labels() {
        let s = StateVector::zero(5).unwrap();
        let d = s.subset_marginals(&[3, 4]).unwrap();
        assert_eq!(d.get("00"), Some(1.0));

        let s = s.apply(&GateOp::rx(4, PI)).unwrap();
        let d = s.subset_marginals(&[3, 4]).unwrap();
        assert!((d.get("01").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(d.labels(), vec!["00", "01", "10", "11"]);
        let d = s.subset_marginals(&[4, 3]).unwrap();
        assert!((d.get("10").unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_errors() {
        let s = StateVector::zero(3).unwrap();
        assert!(matches!(
            s.subset_marginals(&[0, 0]),
            Err(Error::DuplicateQubit(0))
        ));
        assert!(s.subset_marginals(&[5]).is_err());
        assert!(s.subset_marginals(&[]).is_err());
    }

    #[test]
    fn deterministic_state_sampling() {
        let s = StateVector::zero(2).unwrap();
        let counts = s.sample_counts(100, 9).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts["00"], 100);
        assert!(matches!(s.sample_counts(0, 1), Err(Error::ZeroShots)));
    }

    #[test]
    fn register_mismatch() {
        let a = StateVector::zero(2).unwrap();
        let b = StateVector::zero(3).unwrap();
        assert!(a.inner_product(&b).is_err());
    }

    #[test]
    fn bitstrings() {
        assert_eq!(bitstring(1, 5), "00001");
        assert_eq!(bitstring(16, 5), "10000");
    }
}
