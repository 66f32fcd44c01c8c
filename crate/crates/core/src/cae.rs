//! Classical 5-4-3-4-5 autoencoder baseline with hand-written backprop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{threshold_from_losses, Detector};
use crate::error::{check_len, check_rows, Error, Result};
use crate::optim::Adam;

/// Layer widths, input to output.
pub const LAYERS: [usize; 5] = [5, 4, 3, 4, 5];
pub const INPUT_WIDTH: usize = LAYERS[0];
/// `(5·4+4) + (4·3+3) + (3·4+4) + (4·5+5)`.
pub const PARAM_COUNT: usize = 80;

/// Flattened weights and biases. Layer `l` stores its `out x in` weight
/// matrix row-major followed by its `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaeParams(Vec<f64>);

fn layer_offsets() -> [usize; 4] {
    let mut offsets = [0; 4];
    let mut acc = 0;
    for (l, o) in offsets.iter_mut().enumerate() {
        *o = acc;
        acc += LAYERS[l + 1] * LAYERS[l] + LAYERS[l + 1];
    }
    offsets
}

impl CaeParams {
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        check_len(PARAM_COUNT, values.len())?;
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; PARAM_COUNT])
    }

    /// Uniform in `±1/√fan_in` for every weight and bias.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(PARAM_COUNT);
        for l in 0..4 {
            let bound = 1.0 / (LAYERS[l] as f64).sqrt();
            for _ in 0..LAYERS[l + 1] * (LAYERS[l] + 1) {
                values.push(rng.random_range(-bound..bound));
            }
        }
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn weight(&self, l: usize, o: usize, i: usize) -> f64 {
        self.0[layer_offsets()[l] + o * LAYERS[l] + i]
    }

    fn bias(&self, l: usize, o: usize) -> f64 {
        self.0[layer_offsets()[l] + LAYERS[l + 1] * LAYERS[l] + o]
    }
}

/// Per-layer activations of one forward pass; `acts[0]` is the input.
struct Trace {
    acts: Vec<Vec<f64>>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn forward_trace(p: &CaeParams, x: &[f64]) -> Trace {
    let mut acts = Vec::with_capacity(5);
    acts.push(x.to_vec());
    for l in 0..4 {
        let input = &acts[l];
        let out: Vec<f64> = (0..LAYERS[l + 1])
            .map(|o| {
                let z = p.bias(l, o)
                    + (0..LAYERS[l])
                        .map(|i| p.weight(l, o, i) * input[i])
                        .sum::<f64>();
                if l == 3 {
                    z.tanh()
                } else {
                    relu(z)
                }
            })
            .collect();
        acts.push(out);
    }
    Trace { acts }
}

/// Reconstruction of `x`.
pub fn cae_forward(p: &CaeParams, x: &[f64]) -> Result<Vec<f64>> {
    check_len(INPUT_WIDTH, x.len())?;
    Ok(forward_trace(p, x).acts.pop().unwrap_or_default())
}

/// `Σ_k (x_k - out_k)²`.
pub fn reconstruction_error(p: &CaeParams, x: &[f64]) -> Result<f64> {
    let out = cae_forward(p, x)?;
    Ok(x.iter().zip(&out).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Mean batch reconstruction error and its exact gradient. The ReLU
/// derivative at zero is taken as zero.
pub fn cae_gradient(p: &CaeParams, batch: &[Vec<f64>]) -> Result<(CaeParams, f64)> {
    let width = check_rows(batch, "autoencoder batch")?;
    check_len(INPUT_WIDTH, width)?;
    let offsets = layer_offsets();
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut loss = 0.0;
    for x in batch {
        let t = forward_trace(p, x);
        let out = &t.acts[4];
        let mut delta: Vec<f64> = out
            .iter()
            .zip(x)
            .map(|(o, xv)| {
                loss += (xv - o) * (xv - o) * scale;
                -2.0 * (xv - o) * scale * (1.0 - o * o)
            })
            .collect();
        for l in (0..4).rev() {
            let input = &t.acts[l];
            let (n_in, n_out) = (LAYERS[l], LAYERS[l + 1]);
            for o in 0..n_out {
                for i in 0..n_in {
                    grad[offsets[l] + o * n_in + i] += delta[o] * input[i];
                }
                grad[offsets[l] + n_out * n_in + o] += delta[o];
            }
            if l > 0 {
                // input[i] > 0 exactly when the ReLU pre-activation is positive
                delta = (0..n_in)
                    .map(|i| {
                        if input[i] > 0.0 {
                            (0..n_out).map(|o| p.weight(l, o, i) * delta[o]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
    }
    Ok((CaeParams(grad), loss))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CaeConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaeModel {
    params: CaeParams,
    train_mean_loss: f64,
    tau: f64,
}

impl CaeModel {
    pub fn params(&self) -> &CaeParams {
        &self.params
    }

    pub fn train_mean_loss(&self) -> f64 {
        self.train_mean_loss
    }
}

impl Detector for CaeModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        reconstruction_error(&self.params, x)
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn nonzero_parameter_count(&self) -> usize {
        self.params.0.iter().filter(|&&v| v != 0.0).count()
    }

    fn total_parameter_count(&self) -> usize {
        self.params.len()
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Full-batch Adam training.
pub fn train_cae(x_train: &[Vec<f64>], config: &CaeConfig) -> Result<CaeModel> {
    if config.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    if !positive(config.learning_rate) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let width = check_rows(x_train, "training set")?;
    check_len(INPUT_WIDTH, width)?;
    let mut params = CaeParams::init(config.seed);
    let mut opt = Adam::new(PARAM_COUNT, config.learning_rate);
    for _ in 0..config.epochs {
        let (grad, _) = cae_gradient(&params, x_train)?;
        opt.step(&mut params.0, &grad.0);
    }
    let losses = x_train
        .iter()
        .map(|x| reconstruction_error(&params, x))
        .collect::<Result<Vec<_>>>()?;
    let (train_mean_loss, tau) = threshold_from_losses(&losses);
    Ok(CaeModel {
        params,
        train_mean_loss,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighty_parameters() {
        assert_eq!(layer_offsets(), [0, 24, 39, 55]);
        assert_eq!(CaeParams::init(3).len(), PARAM_COUNT);
        assert_eq!(CaeParams::zeros().len(), 80);
        assert!(CaeParams::from_vec(vec![0.0; 79]).is_err());
    }

    #[test]
    fn zero_params_output_zero() {
        let out = cae_forward(&CaeParams::zeros(), &[0.3, -0.1, 0.9, 0.2, -0.5]).unwrap();
        assert_eq!(out, vec![0.0; 5]);
        assert!(cae_forward(&CaeParams::zeros(), &[0.0; 4]).is_err());
    }

    #[test]
    fn zero_loss_and_unit_loss() {
        let (g, loss) = cae_gradient(&CaeParams::zeros(), &[vec![0.0; 5]]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        let (_, loss) =
            cae_gradient(&CaeParams::zeros(), &[vec![1.0, 0.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(loss, 1.0);
        assert!(cae_gradient(&CaeParams::zeros(), &[]).is_err());
    }

    #[test]
    fn outputs_stay_inside_unit_interval() {
        let p = CaeParams::init(11);
        let out = cae_forward(&p, &[5.0, -4.0, 3.0, 9.0, -7.0]).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1.0));
    }
}
