//! ε-insensitive support vector regression.
//!
//! The dual is solved over `β = α - α*`:
//!
//! ```text
//! max  -ε Σ|β_i| + Σ β_i y_i - ½ Σ_ij β_i β_j K_ij
//! s.t. -C <= β_i <= C,  Σ β_i = 0
//! ```
//!
//! by pairwise coordinate ascent. Each step moves `β_i += t, β_j -= t` for
//! the maximally KKT-violating pair and maximizes the piecewise-quadratic
//! objective exactly along that line, so the equality constraint holds at
//! every iterate and the objective never decreases.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_rows, Error, Result};
use crate::kernel::{self, EncodingSpec, KernelMatrix, KernelMode};

/// Coefficients with magnitude at or below this are treated as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration budget in multiples of the training-set size.
    pub max_passes: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::invalid("max_passes must be at least 1"));
        }
        Ok(())
    }
}

/// A fitted dual solution. Prediction takes the kernel row of a new point
/// against the training points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    beta: Vec<f64>,
    bias: f64,
    support: Vec<usize>,
    c: f64,
    epsilon: f64,
    iterations: usize,
    converged: bool,
}

impl SvrModel {
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Whether the solver reached the KKT tolerance within its budget.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Builds a model from explicit coefficients, e.g. for tests or
    /// deserialized solutions.
    pub fn from_parts(beta: Vec<f64>, bias: f64, c: f64, epsilon: f64) -> Self {
        let support = support_of(&beta);
        Self {
            beta,
            bias,
            support,
            c,
            epsilon,
            iterations: 0,
            converged: true,
        }
    }

    /// `Σ_i β_i k_row[i] + b`.
    pub fn predict(&self, k_row: &[f64]) -> Result<f64> {
        check_len(self.beta.len(), k_row.len())?;
        Ok(self.predict_with(|i| k_row[i]))
    }

    /// Prediction given kernel values against training point `i`; only
    /// support indices are queried.
    pub fn predict_with(&self, kernel: impl Fn(usize) -> f64) -> f64 {
        self.support
            .iter()
            .map(|&s| self.beta[s] * kernel(s))
            .sum::<f64>()
            + self.bias
    }
}

fn support_of(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| b.abs() > SUPPORT_THRESHOLD)
        .map(|(i, _)| i)
        .collect()
}

/// Dual objective `-ε Σ|β| + βᵀy - ½ βᵀKβ`.
pub fn dual_objective(beta: &[f64], k: &KernelMatrix, y: &[f64], epsilon: f64) -> Result<f64> {
    check_len(k.size(), beta.len())?;
    check_len(k.size(), y.len())?;
    let m = k.matrix();
    let mut quad = 0.0;
    for i in 0..beta.len() {
        if beta[i] == 0.0 {
            continue;
        }
        let row: f64 = (0..beta.len()).map(|j| m[(i, j)] * beta[j]).sum();
        quad += beta[i] * row;
    }
    let lin: f64 = beta.iter().zip(y).map(|(b, y)| b * y).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    Ok(-epsilon * l1 + lin - 0.5 * quad)
}

/// Fits the dual problem on a precomputed kernel matrix.
pub fn fit_svr(k: &KernelMatrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    Solver::new(k, y, params)?.solve(None)
}

/// As [`fit_svr`], also returning the dual objective after every step
/// (the first entry is the objective at `β = 0`).
pub fn fit_svr_traced(
    k: &KernelMatrix,
    y: &[f64],
    params: &SvrParams,
) -> Result<(SvrModel, Vec<f64>)> {
    let mut trace = vec![0.0];
    let model = Solver::new(k, y, params)?.solve(Some(&mut trace))?;
    Ok((model, trace))
}

struct Solver<'a> {
    k: &'a DMatrix<f64>,
    y: &'a [f64],
    c: f64,
    eps: f64,
    tol: f64,
    max_iter: usize,
    beta: Vec<f64>,
    // y_i - (Kβ)_i
    grad: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(k: &'a KernelMatrix, y: &'a [f64], params: &SvrParams) -> Result<Self> {
        params.validate()?;
        if y.is_empty() {
            return Err(Error::Empty("regression targets"));
        }
        check_len(k.size(), y.len())?;
        let n = y.len();
        Ok(Self {
            k: k.matrix(),
            y,
            c: params.c,
            eps: params.epsilon,
            tol: params.tol,
            max_iter: params.max_passes.saturating_mul(n.max(1)),
            beta: vec![0.0; n],
            grad: y.to_vec(),
        })
    }

    /// Rate of objective gain per unit increase of `β_i`.
    fn up_rate(&self, i: usize) -> f64 {
        if self.beta[i] >= 0.0 {
            self.grad[i] - self.eps
        } else {
            self.grad[i] + self.eps
        }
    }

    /// Negated rate of objective gain per unit decrease of `β_j`.
    fn down_rate(&self, j: usize) -> f64 {
        if self.beta[j] > 0.0 {
            self.grad[j] - self.eps
        } else {
            self.grad[j] + self.eps
        }
    }

    /// Maximal violating pair; ties go to the lowest index.
    fn select(&self) -> Option<(usize, usize, f64)> {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_down: Option<(usize, f64)> = None;
        for i in 0..self.beta.len() {
            if self.beta[i] < self.c {
                let r = self.up_rate(i);
                if best_up.is_none_or(|(_, b)| r > b) {
                    best_up = Some((i, r));
                }
            }
            if self.beta[i] > -self.c {
                let r = self.down_rate(i);
                if best_down.is_none_or(|(_, b)| r < b) {
                    best_down = Some((i, r));
                }
            }
        }
        let ((i, up), (j, down)) = (best_up?, best_down?);
        Some((i, j, up - down))
    }

    /// Exact maximizer of the objective along `β_i += t, β_j -= t`, `t >= 0`.
    /// Returns `(t, gain)`.
    fn line_search(&self, i: usize, j: usize) -> (f64, f64) {
        let (bi, bj) = (self.beta[i], self.beta[j]);
        let hi = (self.c - bi).min(bj + self.c);
        if hi <= 0.0 {
            return (0.0, 0.0);
        }
        let g = self.grad[i] - self.grad[j];
        let eta = self.k[(i, i)] + self.k[(j, j)] - 2.0 * self.k[(i, j)];
        let eps = self.eps;
        let phi = |t: f64| {
            g * t
                - 0.5 * eta * t * t
                - eps * ((bi + t).abs() + (bj - t).abs() - bi.abs() - bj.abs())
        };

        let mut knots = vec![0.0, hi];
        for b in [-bi, bj] {
            if b > 0.0 && b < hi {
                knots.push(b);
            }
        }
        knots.sort_by(f64::total_cmp);
        let mut best = (0.0, 0.0);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let si = (bi + mid).signum();
            let sj = (bj - mid).signum();
            let lin = g - eps * si + eps * sj;
            let t = if eta > 1e-12 {
                (lin / eta).clamp(a, b)
            } else if lin > 0.0 {
                b
            } else {
                a
            };
            let v = phi(t);
            if v > best.1 {
                best = (t, v);
            }
        }
        (best.0, best.1)
    }

    fn solve(mut self, mut trace: Option<&mut Vec<f64>>) -> Result<SvrModel> {
        let n = self.beta.len();
        let mut iterations = 0;
        let mut converged = false;
        let mut objective = 0.0;
        while iterations < self.max_iter {
            let Some((i, j, violation)) = self.select() else {
                converged = true;
                break;
            };
            if violation <= self.tol {
                converged = true;
                break;
            }
            let (t, gain) = self.line_search(i, j);
            if t <= 0.0 {
                // numerically stalled: no ascent along the chosen pair
                converged = violation <= self.tol;
                break;
            }
            let hi = (self.c - self.beta[i]).min(self.beta[j] + self.c);
            let (old_i, old_j) = (self.beta[i], self.beta[j]);
            let mut new_i = old_i + t;
            let mut new_j = old_j - t;
            if t == -old_i {
                new_i = 0.0;
            }
            if t == old_j {
                new_j = 0.0;
            }
            if t == hi {
                if self.c - old_i <= old_j + self.c {
                    new_i = self.c;
                } else {
                    new_j = -self.c;
                }
            }
            let (di, dj) = (new_i - old_i, new_j - old_j);
            self.beta[i] = new_i;
            self.beta[j] = new_j;
            for k in 0..n {
                self.grad[k] -= di * self.k[(k, i)] + dj * self.k[(k, j)];
            }
            iterations += 1;
            objective += gain;
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(objective);
            }
        }

        // refresh residuals to shed accumulated drift
        for k in 0..n {
            self.grad[k] = self.y[k] - (0..n).map(|l| self.k[(k, l)] * self.beta[l]).sum::<f64>();
        }
        let bias = self.bias();
        let support = support_of(&self.beta);
        Ok(SvrModel {
            beta: self.beta,
            bias,
            support,
            c: self.c,
            epsilon: self.eps,
            iterations,
            converged,
        })
    }

    fn at_bound(&self, b: f64) -> bool {
        self.c - b.abs() <= 1e-12 * self.c
    }

    fn bias(&self) -> f64 {
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        // KKT-feasible interval for b when no free vectors exist
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for (i, &b) in self.beta.iter().enumerate() {
            let r = self.grad[i];
            if b.abs() <= SUPPORT_THRESHOLD {
                lower = lower.max(r - self.eps);
                upper = upper.min(r + self.eps);
            } else if self.at_bound(b) {
                if b > 0.0 {
                    upper = upper.min(r - self.eps);
                } else {
                    lower = lower.max(r + self.eps);
                }
            } else {
                free_sum += r - b.signum() * self.eps;
                free_count += 1;
            }
        }
        if free_count > 0 {
            free_sum / free_count as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            0.0
        }
    }
}

/// `exp(-γ‖x - z‖²)`.
pub fn rbf_kernel_entry(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    check_len(x.len(), z.len())?;
    Ok(rbf_unchecked(x, z, gamma))
}

fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

pub fn rbf_gram(rows: &[Vec<f64>], gamma: f64) -> Result<KernelMatrix> {
    check_gamma(gamma)?;
    check_rows(rows, "rbf gram input")?;
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in i + 1..n {
            let v = rbf_unchecked(&rows[i], &rows[j], gamma);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    KernelMatrix::new(m)
}

pub fn rbf_cross(a: &[Vec<f64>], b: &[Vec<f64>], gamma: f64) -> Result<DMatrix<f64>> {
    check_gamma(gamma)?;
    let wa = check_rows(a, "rbf cross left input")?;
    let wb = check_rows(b, "rbf cross right input")?;
    check_len(wa, wb)?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        rbf_unchecked(&a[i], &b[j], gamma)
    }))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "RBF gamma must be positive, got {gamma}"
        )))
    }
}

/// `1 / (d · Var(X))` over all entries of `rows`; 1.0 for constant data.
pub fn scale_gamma(rows: &[Vec<f64>]) -> Result<f64> {
    let d = check_rows(rows, "gamma heuristic input")?;
    let n = (rows.len() * d) as f64;
    let mean = rows.iter().flatten().sum::<f64>() / n;
    let var = rows
        .iter()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    if var > 0.0 && d > 0 {
        Ok(1.0 / (d as f64 * var))
    } else {
        Ok(1.0)
    }
}

/// How kernel values are produced for training rows and new points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KernelBinding {
    Quantum {
        spec: EncodingSpec,
        mode: KernelMode,
    },
    Rbf {
        gamma: f64,
    },
}

impl KernelBinding {
    pub fn gram(&self, rows: &[Vec<f64>]) -> Result<KernelMatrix> {
        match self {
            KernelBinding::Quantum { spec, mode } => kernel::gram_matrix(rows, spec, *mode),
            KernelBinding::Rbf { gamma } => rbf_gram(rows, *gamma),
        }
    }

    pub fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        match self {
            KernelBinding::Quantum { spec, mode } => kernel::cross_kernel(a, b, spec, *mode),
            KernelBinding::Rbf { gamma } => rbf_cross(a, b, *gamma),
        }
    }
}

/// An SVR fitted directly on feature rows with an RBF kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct RbfSvr {
    gamma: f64,
    rows: Vec<Vec<f64>>,
    model: SvrModel,
}

impl RbfSvr {
    pub fn fit(rows: &[Vec<f64>], y: &[f64], gamma: f64, params: &SvrParams) -> Result<Self> {
        let k = rbf_gram(rows, gamma)?;
        let model = fit_svr(&k, y, params)?;
        Ok(Self {
            gamma,
            rows: rows.to_vec(),
            model,
        })
    }

    pub fn model(&self) -> &SvrModel {
        &self.model
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_len(self.rows[0].len(), x.len())?;
        Ok(self
            .model
            .predict_with(|i| rbf_unchecked(x, &self.rows[i], self.gamma)))
    }
}
