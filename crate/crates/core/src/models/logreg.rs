use serde::{Deserialize, Serialize};

use super::{check_training_set, class_counts, Classifier, N_CLASSES};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::labeling::SentimentLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    /// L2 strength on the weights (biases are not penalized).
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    /// Trial step of the first line search; later searches start from twice
    /// the previously accepted step.
    pub initial_step: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iters: 1000,
            tol: 1e-6,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTrainingLog {
    pub iterations: usize,
    pub final_objective: f64,
    pub final_gradient_norm: f64,
    pub converged: bool,
}

/// Multinomial (softmax) logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub config: LrConfig,
    pub dim: usize,
    /// Row-major `3 x dim`.
    pub weights: Vec<f64>,
    pub bias: [f64; N_CLASSES],
    pub log: LrTrainingLog,
}

/// Mean cross-entropy plus `(lambda / 2) * ||W||^2` as a function of the flat
/// parameter vector `[W (row-major 3 x d), b (3)]`.
pub struct LogRegObjective<'a> {
    xs: &'a [SparseVector],
    ys: &'a [SentimentLabel],
    lambda: f64,
    dim: usize,
}

fn logits(params: &[f64], dim: usize, x: &SparseVector) -> [f64; N_CLASSES] {
    let mut z = [0.0; N_CLASSES];
    for (k, zk) in z.iter_mut().enumerate() {
        let row = &params[k * dim..(k + 1) * dim];
        *zk = x.dot(row) + params[N_CLASSES * dim + k];
    }
    z
}

fn softmax(z: [f64; N_CLASSES]) -> ([f64; N_CLASSES], f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    (z.map(|v| (v - lse).exp()), lse)
}

impl<'a> LogRegObjective<'a> {
    pub fn new(xs: &'a [SparseVector], ys: &'a [SentimentLabel], lambda: f64) -> Result<Self> {
        let dim = check_training_set(xs, ys)?;
        Ok(Self { xs, ys, lambda, dim })
    }

    pub fn n_params(&self) -> usize {
        N_CLASSES * (self.dim + 1)
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.lambda * params[..N_CLASSES * self.dim].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let loss: f64 = self
            .xs
            .iter()
            .zip(self.ys)
            .map(|(x, y)| {
                let z = logits(params, self.dim, x);
                let (_, lse) = softmax(z);
                lse - z[y.index()]
            })
            .sum();
        loss / self.xs.len() as f64 + self.penalty(params)
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dim;
        let n = self.xs.len() as f64;
        let mut grad = vec![0.0; self.n_params()];
        let mut loss = 0.0;
        for (x, y) in self.xs.iter().zip(self.ys) {
            let z = logits(params, d, x);
            let (p, lse) = softmax(z);
            loss += lse - z[y.index()];
            for k in 0..N_CLASSES {
                let r = p[k] - if k == y.index() { 1.0 } else { 0.0 };
                for (j, v) in x.iter() {
                    grad[k * d + j] += r * v;
                }
                grad[N_CLASSES * d + k] += r;
            }
        }
        for g in &mut grad {
            *g /= n;
        }
        for (g, w) in grad[..N_CLASSES * d].iter_mut().zip(&params[..N_CLASSES * d]) {
            *g += self.lambda * w;
        }
        (loss / n + self.penalty(params), grad)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        self.value_and_gradient(params).1
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Full-batch gradient descent from zero weights with a halving backtracking
/// line search (Armijo constant 1e-4). Stops when the gradient norm drops
/// below `tol`, after `max_iters` updates, or when no step decreases the
/// objective.
pub fn train_logreg(xs: &[SparseVector], ys: &[SentimentLabel], config: &LrConfig) -> Result<LrModel> {
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::contract("lambda must be finite and non-negative"));
    }
    let objective = LogRegObjective::new(xs, ys, config.lambda)?;
    if class_counts(ys).iter().filter(|c| **c > 0).count() < 2 {
        return Err(Error::contract("logistic regression needs at least two classes"));
    }
    let mut params = vec![0.0; objective.n_params()];
    let (mut f, mut g) = objective.value_and_gradient(&params);
    let mut step = config.initial_step;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2.sqrt() < config.tol {
            converged = true;
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = params.iter().zip(&g).map(|(p, gi)| p - t * gi).collect();
            let fc = objective.value(&cand);
            if fc <= f - ARMIJO_C * t * g2 {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let Some(next) = accepted else { break };
        params = next;
        (f, g) = objective.value_and_gradient(&params);
        step = 2.0 * t;
        iterations += 1;
    }
    let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !converged && grad_norm < config.tol {
        converged = true;
    }
    let dim = xs[0].dim();
    let bias = [
        params[N_CLASSES * dim],
        params[N_CLASSES * dim + 1],
        params[N_CLASSES * dim + 2],
    ];
    params.truncate(N_CLASSES * dim);
    Ok(LrModel {
        config: config.clone(),
        dim,
        weights: params,
        bias,
        log: LrTrainingLog {
            iterations,
            final_objective: f,
            final_gradient_norm: grad_norm,
            converged,
        },
    })
}

impl Classifier for LrModel {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Softmax class probabilities.
    fn scores(&self, x: &SparseVector) -> [f64; N_CLASSES] {
        let mut z = self.bias;
        for (k, zk) in z.iter_mut().enumerate() {
            *zk += x.dot(&self.weights[k * self.dim..(k + 1) * self.dim]);
        }
        softmax(z).0
    }
}
