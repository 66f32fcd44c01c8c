//! Quantum autoencoder anomaly detector.
//!
//! The circuit is the kernel's feature map followed by a single trainable
//! layer of `RY` and `RX` rotations on every qubit and `RZZ` on every qubit
//! pair. The loss is the expected Hamming weight of the measured trash
//! qubits; training pushes the trash register towards `|0…0⟩` for normal
//! data, so anomalies score high.

use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{threshold_from_losses, Detector};
use crate::error::{check_len, check_rows, Error, Result};
use crate::kernel::{pairs, EncodingSpec};
use crate::optim::Adam;
use crate::statevector::{bitstring, Circuit, GateOp, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaeConfig {
    pub encoding: EncodingSpec,
    pub trash_qubits: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub init_scale: f64,
    pub seed: u64,
    /// Estimate the loss from this many shots instead of exact marginals.
    pub shots: Option<u64>,
}

impl Default for QaeConfig {
    fn default() -> Self {
        Self {
            encoding: EncodingSpec::default(),
            trash_qubits: vec![3, 4],
            epochs: 10,
            batch_size: 1,
            learning_rate: 0.01,
            init_scale: 0.01,
            seed: 0,
            shots: None,
        }
    }
}

impl QaeConfig {
    pub fn n_qubits(&self) -> usize {
        self.encoding.n_qubits()
    }

    /// `2n + n(n-1)/2` trainable angles.
    pub fn param_count(&self) -> usize {
        let n = self.n_qubits();
        2 * n + n * (n - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if self.trash_qubits.is_empty() || self.trash_qubits.len() >= n {
            return Err(Error::invalid(format!(
                "trash register must hold 1..{n} qubits, got {}",
                self.trash_qubits.len()
            )));
        }
        for (k, &q) in self.trash_qubits.iter().enumerate() {
            if q >= n {
                return Err(Error::QubitIndex {
                    index: q,
                    n_qubits: n,
                });
            }
            if self.trash_qubits[..k].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        if self.batch_size != 1 {
            return Err(Error::invalid("only batch size 1 is supported"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0)
            || !(self.init_scale.is_finite() && self.init_scale > 0.0)
        {
            return Err(Error::invalid(
                "learning rate and init scale must be positive",
            ));
        }
        if self.shots == Some(0) {
            return Err(Error::ZeroShots);
        }
        Ok(())
    }

    /// Seeded uniform draw in `[-init_scale, init_scale]`.
    pub fn initial_params(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.param_count())
            .map(|_| rng.random_range(-self.init_scale..=self.init_scale))
            .collect()
    }
}

/// Trainable layer: `RY(θ_i)` on each qubit, `RX(θ_{n+i})`, then
/// `RZZ` over pairs `i < j` in lexicographic order.
pub fn trainable_layer(params: &[f64], n_qubits: usize) -> Circuit {
    let mut c = Circuit::new();
    for (q, &theta) in params[..n_qubits].iter().enumerate() {
        c.push(GateOp::ry(q, theta));
    }
    for (q, &theta) in params[n_qubits..2 * n_qubits].iter().enumerate() {
        c.push(GateOp::rx(q, theta));
    }
    for (k, (a, b)) in pairs(n_qubits).enumerate() {
        c.push(GateOp::rzz(a, b, params[2 * n_qubits + k]));
    }
    c
}

fn check_inputs(params: &[f64], x: &[f64], config: &QaeConfig) -> Result<()> {
    check_len(config.param_count(), params.len())?;
    check_len(config.n_qubits(), x.len())
}

fn trash_loss(encoded: &StateVector, params: &[f64], config: &QaeConfig) -> Result<f64> {
    let state = encoded.apply_circuit(&trainable_layer(params, config.n_qubits()))?;
    match config.shots {
        None => Ok(state
            .subset_marginals(&config.trash_qubits)?
            .expected_hamming_weight()),
        Some(shots) => {
            let counts = state.sample_index_counts(shots, config.seed)?;
            let n = config.n_qubits();
            let weight: u64 = counts
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c > 0)
                .map(|(i, &c)| {
                    let bits = bitstring(i, n).into_bytes();
                    c * config
                        .trash_qubits
                        .iter()
                        .filter(|&&q| bits[q] == b'1')
                        .count() as u64
                })
                .sum();
            Ok(weight as f64 / shots as f64)
        }
    }
}

/// Expected Hamming weight of the trash register after encoding `x` and
/// applying the trainable layer. For two trash qubits this is
/// `p(01) + p(10) + 2·p(11)`.
pub fn qae_loss(params: &[f64], x: &[f64], config: &QaeConfig) -> Result<f64> {
    config.validate()?;
    check_inputs(params, x, config)?;
    trash_loss(&config.encoding.encode(x)?, params, config)
}

/// Parameter-shift gradient of [`qae_loss`].
pub fn qae_gradient(params: &[f64], x: &[f64], config: &QaeConfig) -> Result<Vec<f64>> {
    config.validate()?;
    check_inputs(params, x, config)?;
    gradient_unchecked(params, &config.encoding.encode(x)?, config)
}

fn gradient_unchecked(
    params: &[f64],
    encoded: &StateVector,
    config: &QaeConfig,
) -> Result<Vec<f64>> {
    let mut shifted = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        shifted[k] = params[k] + FRAC_PI_2;
        let plus = trash_loss(encoded, &shifted, config)?;
        shifted[k] = params[k] - FRAC_PI_2;
        let minus = trash_loss(encoded, &shifted, config)?;
        shifted[k] = params[k];
        grad.push(0.5 * (plus - minus));
    }
    Ok(grad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaeModel {
    params: Vec<f64>,
    config: QaeConfig,
    train_mean_loss: f64,
    tau: f64,
}

impl QaeModel {
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn config(&self) -> &QaeConfig {
        &self.config
    }

    pub fn train_mean_loss(&self) -> f64 {
        self.train_mean_loss
    }
}

impl Detector for QaeModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        qae_loss(&self.params, x, &self.config)
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn nonzero_parameter_count(&self) -> usize {
        self.params.iter().filter(|&&p| p != 0.0).count()
    }

    fn total_parameter_count(&self) -> usize {
        self.params.len()
    }
}

/// Mean loss of `params` over `rows`.
pub fn mean_loss(params: &[f64], rows: &[Vec<f64>], config: &QaeConfig) -> Result<f64> {
    let losses = rows
        .iter()
        .map(|x| qae_loss(params, x, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains with single-sample Adam steps over a seeded shuffle each epoch.
pub fn train_qae(x_train: &[Vec<f64>], config: &QaeConfig) -> Result<QaeModel> {
    config.validate()?;
    let width = check_rows(x_train, "training set")?;
    check_len(config.n_qubits(), width)?;
    let encoded = x_train
        .iter()
        .map(|x| config.encoding.encode(x))
        .collect::<Result<Vec<_>>>()?;

    let mut params = config.initial_params();
    let mut opt = Adam::new(params.len(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..x_train.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let grad = gradient_unchecked(&params, &encoded[i], config)?;
            opt.step(&mut params, &grad);
        }
    }

    let losses = encoded
        .iter()
        .map(|s| trash_loss(s, &params, config))
        .collect::<Result<Vec<_>>>()?;
    let (train_mean_loss, tau) = threshold_from_losses(&losses);
    Ok(QaeModel {
        params,
        config: config.clone(),
        train_mean_loss,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_circuit_has_zero_loss_and_gradient() {
        let cfg = QaeConfig::default();
        assert_eq!(qae_loss(&[0.0; 20], &[0.0; 5], &cfg).unwrap(), 0.0);
        let g = qae_gradient(&[0.0; 20], &[0.0; 5], &cfg).unwrap();
        assert_eq!(g.len(), 20);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn twenty_parameters_for_five_qubits() {
        let cfg = QaeConfig::default();
        assert_eq!(cfg.param_count(), 20);
        assert_eq!(trainable_layer(&[0.1; 20], 5).len(), 20);
        let p = cfg.initial_params();
        assert_eq!(p.len(), 20);
        assert!(p.iter().all(|v| v.abs() <= 0.01));
    }

    #[test]
    fn config_validation() {
        let mut cfg = QaeConfig::default();
        cfg.trash_qubits = vec![3, 3];
        assert!(cfg.validate().is_err());
        let mut cfg = QaeConfig::default();
        cfg.trash_qubits = vec![0, 1, 2, 3, 4];
        assert!(cfg.validate().is_err());
        let mut cfg = QaeConfig::default();
        cfg.batch_size = 4;
        assert!(cfg.validate().is_err());
        let cfg = QaeConfig::default();
        assert!(qae_loss(&[0.0; 19], &[0.0; 5], &cfg).is_err());
        assert!(qae_loss(&[0.0; 20], &[0.0; 4], &cfg).is_err());
        assert!(train_qae(&[], &cfg).is_err());
    }

    #[test]
    fn shot_loss_tracks_exact_loss() {
        let cfg = QaeConfig::default();
        let params: Vec<f64> = (0..20).map(|k| 0.1 * k as f64 - 0.9).collect();
        let x = [0.4, -0.3, 0.8, 0.1, -0.6];
        let exact = qae_loss(&params, &x, &cfg).unwrap();
        let shot_cfg = QaeConfig {
            shots: Some(20_000),
            ..QaeConfig::default()
        };
        let est = qae_loss(&params, &x, &shot_cfg).unwrap();
        assert!((exact - est).abs() < 0.03, "{exact} vs {est}");
    }
}
