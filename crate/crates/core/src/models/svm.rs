use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_set, class_counts, Classifier, N_CLASSES};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::labeling::SentimentLabel;
use crate::seed::{derived_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 20,
        }
    }
}

/// One-vs-rest linear SVM. `scores` returns the three margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub config: SvmConfig,
    pub seed: u64,
    pub dim: usize,
    /// `weights[k]` has length `dim`.
    pub weights: Vec<Vec<f64>>,
    pub bias: [f64; N_CLASSES],
    /// Sum over the three binary problems of `(lambda / 2) ||w||^2 + mean
    /// hinge`. Entry `e` is evaluated on the weights that training for
    /// `e + 1` epochs would have returned.
    pub epoch_objectives: Vec<f64>,
}

/// Running sum of iterates `sum_t w_t`, kept as `big_a * v - u` so sparse
/// updates to `v` stay sparse.
#[derive(Clone)]
struct Accum {
    big_a: f64,
    u: Vec<f64>,
    count: u64,
}

impl Accum {
    fn new(len: usize) -> Self {
        Self {
            big_a: 0.0,
            u: vec![0.0; len],
            count: 0,
        }
    }

    fn mean(&self, v: &[f64]) -> Vec<f64> {
        let n = self.count as f64;
        v.iter()
            .zip(&self.u)
            .map(|(vj, uj)| (self.big_a * vj - uj) / n)
            .collect()
    }
}

/// Pegasos iterate `w = a * v` over `dim + 1` coordinates, the last one being
/// the constant bias feature, plus any number of open averaging windows
/// keyed by the epoch that will read them.
struct Pegasos {
    lambda: f64,
    a: f64,
    v: Vec<f64>,
    v_sq: f64,
    windows: Vec<(usize, Accum)>,
}

impl Pegasos {
    fn new(dim: usize, lambda: f64) -> Self {
        Self {
            lambda,
            a: 1.0,
            v: vec![0.0; dim + 1],
            v_sq: 0.0,
            windows: Vec::new(),
        }
    }

    fn open_window(&mut self, key: usize) {
        self.windows.push((key, Accum::new(self.v.len())));
    }

    /// Mean iterate since `open_window(key)`; closes the window.
    fn close_window(&mut self, key: usize) -> Vec<f64> {
        let pos = self
            .windows
            .iter()
            .position(|(k, _)| *k == key)
            .expect("window was opened");
        let (_, acc) = self.windows.swap_remove(pos);
        acc.mean(&self.v)
    }

    fn margin(&self, x: &SparseVector) -> f64 {
        self.a * (x.dot(&self.v) + self.v[self.v.len() - 1])
    }

    fn add_to_v(&mut self, j: usize, delta: f64) {
        let old = self.v[j];
        self.v[j] = old + delta;
        self.v_sq += 2.0 * old * delta + delta * delta;
        for (_, acc) in &mut self.windows {
            acc.u[j] += acc.big_a * delta;
        }
    }

    fn step(&mut self, t: u64, x: &SparseVector, y: f64) {
        let eta = 1.0 / (self.lambda * t as f64);
        let violated = y * self.margin(x) < 1.0;
        let shrink = 1.0 - eta * self.lambda;
        if shrink <= 0.0 {
            for j in 0..self.v.len() {
                let vj = self.v[j];
                if vj != 0.0 {
                    self.add_to_v(j, -vj);
                }
            }
            self.v_sq = 0.0;
            self.a = 1.0;
        } else {
            self.a *= shrink;
        }
        if violated {
            let c = eta * y / self.a;
            for (j, xj) in x.iter() {
                self.add_to_v(j, c * xj);
            }
            let last = self.v.len() - 1;
            self.add_to_v(last, c);
        }
        let norm = self.a * self.v_sq.max(0.0).sqrt();
        let radius = 1.0 / self.lambda.sqrt();
        if norm > radius {
            self.a *= radius / norm;
        }
        if self.a < 1e-150 {
            self.rescale();
        }
        for (_, acc) in &mut self.windows {
            acc.big_a += self.a;
            acc.count += 1;
        }
    }

    /// Fold `a` into `v` to keep it away from underflow.
    fn rescale(&mut self) {
        let a = self.a;
        for vj in &mut self.v {
            *vj *= a;
        }
        self.v_sq *= a * a;
        for (_, acc) in &mut self.windows {
            acc.big_a /= a;
        }
        self.a = 1.0;
    }

    #[cfg(test)]
    fn current(&self) -> Vec<f64> {
        self.v.iter().map(|vj| self.a * vj).collect()
    }
}

/// First update of the final half when `total` updates are made.
fn window_start(total: u64) -> u64 {
    total - total / 2 + 1
}

fn binary_objective(w: &[f64], xs: &[SparseVector], ys: &[f64], lambda: f64) -> f64 {
    let bias = w[w.len() - 1];
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (x.dot(w) + bias)).max(0.0))
        .sum();
    0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + hinge / xs.len() as f64
}

/// Pegasos with step `1 / (lambda t)`, one shuffled pass over the rows per
/// epoch, projection onto the ball of radius `1 / sqrt(lambda)`. The bias is
/// an extra constant feature and is regularized with the weights. The
/// returned weights average the iterates of the final half of all updates.
pub fn train_svm(xs: &[SparseVector], ys: &[SentimentLabel], config: &SvmConfig, seed: u64) -> Result<SvmModel> {
    if config.epochs < 1 {
        return Err(Error::contract("SVM needs at least one epoch"));
    }
    if !(config.lambda > 0.0 && config.lambda.is_finite()) {
        return Err(Error::contract(format!("lambda must be positive, got {}", config.lambda)));
    }
    let dim = check_training_set(xs, ys)?;
    if class_counts(ys).iter().filter(|c| **c > 0).count() < 2 {
        return Err(Error::contract("SVM needs at least two classes"));
    }
    let n = xs.len() as u64;

    let mut weights = Vec::with_capacity(N_CLASSES);
    let mut bias = [0.0; N_CLASSES];
    let mut epoch_objectives = vec![0.0; config.epochs];
    for k in 0..N_CLASSES {
        let targets: Vec<f64> = ys
            .iter()
            .map(|y| if y.index() == k { 1.0 } else { -1.0 })
            .collect();
        let mut rng = derived_rng(seed, Stream::Svm, k as u64);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut state = Pegasos::new(dim, config.lambda);
        // Epoch e reads the average over the final half of its first e*n
        // updates, which is exactly what training for e epochs would return.
        let starts: Vec<u64> = (1..=config.epochs as u64).map(|e| window_start(e * n)).collect();
        let mut t = 0u64;
        let mut w = Vec::new();
        for (e, objective) in epoch_objectives.iter_mut().enumerate() {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                for (key, _) in starts.iter().enumerate().filter(|(_, s)| **s == t) {
                    state.open_window(key);
                }
                state.step(t, &xs[i], targets[i]);
            }
            w = state.close_window(e);
            *objective += binary_objective(&w, xs, &targets, config.lambda);
        }
        bias[k] = w.pop().expect("bias coordinate");
        weights.push(w);
    }
    Ok(SvmModel {
        config: config.clone(),
        seed,
        dim,
        weights,
        bias,
        epoch_objectives,
    })
}

impl Classifier for SvmModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &SparseVector) -> [f64; N_CLASSES] {
        let mut out = self.bias;
        for (k, o) in out.iter_mut().enumerate() {
            *o += x.dot(&self.weights[k]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::predict;
    use SentimentLabel::*;

    fn separable() -> (Vec<SparseVector>, Vec<SentimentLabel>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..10 {
            xs.push(SparseVector::from_dense(&[1.0]));
            ys.push(Positive);
            xs.push(SparseVector::from_dense(&[-1.0]));
            ys.push(Negative);
        }
        (xs, ys)
    }

    #[test]
    fn separable_set_is_learned() {
        let (xs, ys) = separable();
        for lambda in [1e-4, 1e-3, 1e-2] {
            let config = SvmConfig { lambda, epochs: 20 };
            let model = train_svm(&xs, &ys, &config, 3).unwrap();
            assert_eq!(predict(&model, &xs).unwrap().labels, ys, "lambda {lambda}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (xs, ys) = separable();
        let config = SvmConfig::default();
        let a = train_svm(&xs, &ys, &config, 9).unwrap();
        let b = train_svm(&xs, &ys, &config, 9).unwrap();
        assert_eq!(a, b);
        for (wa, wb) in a.weights.iter().flatten().zip(b.weights.iter().flatten()) {
            assert_eq!(wa.to_bits(), wb.to_bits());
        }
    }

    #[test]
    fn objective_mostly_non_increasing() {
        let (xs, ys) = separable();
        for seed in 0..6 {
            let config = SvmConfig { lambda: 1e-2, epochs: 50 };
            let model = train_svm(&xs, &ys, &config, seed).unwrap();
            let obj = &model.epoch_objectives;
            let ok = obj.windows(2).filter(|w| w[1] <= w[0]).count();
            assert!(ok * 10 >= (obj.len() - 1) * 9, "seed {seed}: {obj:?}");
        }
    }

    #[test]
    fn lazy_average_matches_dense_average() {
        let xs = vec![
            SparseVector::from_dense(&[1.0, 0.0, 0.5]),
            SparseVector::from_dense(&[0.0, -1.0, 0.2]),
            SparseVector::from_dense(&[0.3, 0.3, 0.0]),
        ];
        let ys = [1.0, -1.0, 1.0];
        let lambda = 0.1;
        let mut state = Pegasos::new(3, lambda);
        let mut sum = vec![0.0; 4];
        let mut count = 0.0;
        let mut t = 0;
        for round in 0..30 {
            for i in 0..3 {
                t += 1;
                if round == 10 && i == 1 {
                    state.open_window(0);
                }
                state.step(t, &xs[i], ys[i]);
                if round > 10 || (round == 10 && i >= 1) {
                    for (s, w) in sum.iter_mut().zip(state.current()) {
                        *s += w;
                    }
                    count += 1.0;
                }
            }
        }
        for (lazy, dense) in state.close_window(0).iter().zip(&sum) {
            assert!((lazy - dense / count).abs() < 1e-9, "{lazy} vs {}", dense / count);
        }
    }

    #[test]
    fn bad_config_rejected() {
        let (xs, ys) = separable();
        let zero = SvmConfig { lambda: 1e-3, epochs: 0 };
        assert!(matches!(train_svm(&xs, &ys, &zero, 0), Err(Error::Contract(_))));
        let one_class = vec![Positive; xs.len()];
        assert!(train_svm(&xs, &one_class, &SvmConfig::default(), 0).is_err());
    }
}
