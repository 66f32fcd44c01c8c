//! Per-feature SVR reconstruction detectors and the shared threshold rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_rows, Result};
use crate::kernel::KernelMatrix;
use crate::svr::{fit_svr, KernelBinding, SvrModel, SvrParams};

/// Multiplier applied to the mean training loss to obtain the threshold.
pub const THRESHOLD_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    /// Strictly above the threshold is anomalous.
    pub fn from_score(score: f64, tau: f64) -> Self {
        if score > tau {
            Label::Anomalous
        } else {
            Label::Normal
        }
    }
}

/// `(mean, THRESHOLD_FACTOR * mean)` of in-sample training losses.
pub fn threshold_from_losses(losses: &[f64]) -> (f64, f64) {
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    (mean, THRESHOLD_FACTOR * mean)
}

/// A fitted anomaly scorer with a threshold.
pub trait Detector {
    fn score(&self, x: &[f64]) -> Result<f64>;

    fn score_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.score(x)).collect()
    }

    fn tau(&self) -> f64;

    fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_score(self.score(x)?, self.tau()))
    }

    fn nonzero_parameter_count(&self) -> usize;

    fn total_parameter_count(&self) -> usize;
}

/// One SVR per feature, each regressing that feature on the full row.
/// The anomaly score is the squared reconstruction error summed over
/// features.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionDetector {
    binding: KernelBinding,
    train: Vec<Vec<f64>>,
    sub_models: Vec<SvrModel>,
    train_mean_loss: f64,
    tau: f64,
}

impl ReconstructionDetector {
    pub fn fit(x_train: &[Vec<f64>], binding: KernelBinding, params: &SvrParams) -> Result<Self> {
        check_rows(x_train, "training set")?;
        let gram = binding.gram(x_train)?;
        Self::fit_with_gram(x_train, &gram, binding, params)
    }

    /// Fits against an already computed training Gram matrix, which must
    /// belong to `binding` evaluated on `x_train`.
    pub fn fit_with_gram(
        x_train: &[Vec<f64>],
        gram: &KernelMatrix,
        binding: KernelBinding,
        params: &SvrParams,
    ) -> Result<Self> {
        let d = check_rows(x_train, "training set")?;
        check_len(x_train.len(), gram.size())?;
        params.validate()?;
        let sub_models = (0..d)
            .into_par_iter()
            .map(|k| {
                let y: Vec<f64> = x_train.iter().map(|r| r[k]).collect();
                fit_svr(gram, &y, params)
            })
            .collect::<Result<Vec<_>>>()?;
        let m = gram.matrix();
        let losses: Vec<f64> = x_train
            .iter()
            .enumerate()
            .map(|(i, x)| squared_error(x, &sub_models, |j| m[(i, j)]))
            .collect();
        let (train_mean_loss, tau) = threshold_from_losses(&losses);
        Ok(Self {
            binding,
            train: x_train.to_vec(),
            sub_models,
            train_mean_loss,
            tau,
        })
    }

    pub fn binding(&self) -> &KernelBinding {
        &self.binding
    }

    pub fn sub_models(&self) -> &[SvrModel] {
        &self.sub_models
    }

    pub fn train_rows(&self) -> &[Vec<f64>] {
        &self.train
    }

    pub fn train_mean_loss(&self) -> f64 {
        self.train_mean_loss
    }

    pub fn width(&self) -> usize {
        self.sub_models.len()
    }

    /// Reconstructed features of `x`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.width(), x.len())?;
        let row = self.binding.cross(&[x.to_vec()], &self.train)?;
        Ok(self
            .sub_models
            .iter()
            .map(|m| m.predict_with(|j| row[(0, j)]))
            .collect())
    }
}

fn squared_error(x: &[f64], models: &[SvrModel], kernel: impl Fn(usize) -> f64 + Copy) -> f64 {
    x.iter()
        .zip(models)
        .map(|(v, m)| {
            let r = v - m.predict_with(kernel);
            r * r
        })
        .sum()
}

impl Detector for ReconstructionDetector {
    fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(self.score_batch(&[x.to_vec()])?[0])
    }

    fn score_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let width = check_rows(xs, "rows to score")?;
        check_len(self.width(), width)?;
        let rows = self.binding.cross(xs, &self.train)?;
        Ok(xs
            .iter()
            .enumerate()
            .map(|(r, x)| squared_error(x, &self.sub_models, |j| rows[(r, j)]))
            .collect())
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    /// Two dual coefficients per support vector per sub-model.
    fn nonzero_parameter_count(&self) -> usize {
        2 * self
            .sub_models
            .iter()
            .map(SvrModel::n_support)
            .sum::<usize>()
    }

    fn total_parameter_count(&self) -> usize {
        2 * self.train.len() * self.width()
    }
}
