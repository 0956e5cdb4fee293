use serde::{Deserialize, Serialize};

use super::{check_training_set, class_counts, Classifier, N_CLASSES};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::labeling::SentimentLabel;

/// Multinomial naive Bayes over fractional (TF-IDF) counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub alpha: f64,
    pub class_count: [u64; N_CLASSES],
    /// `feature_log_prob[k][j] = ln P(feature j | class k)`, Laplace-smoothed.
    pub feature_log_prob: Vec<Vec<f64>>,
}

/// Fit with Laplace smoothing `alpha`:
/// `P(j | k) = (mass_kj + alpha) / (sum_j mass_kj + alpha * d)` where
/// `mass_kj` sums feature `j` over class-`k` rows. A class without training
/// rows gets prior zero and can never be predicted.
pub fn train_nb(xs: &[SparseVector], ys: &[SentimentLabel], alpha: f64) -> Result<NbModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::contract(format!("alpha must be positive, got {alpha}")));
    }
    let dim = check_training_set(xs, ys)?;
    if xs.iter().flat_map(|x| x.iter()).any(|(_, v)| v < 0.0) {
        return Err(Error::contract("naive Bayes needs non-negative features"));
    }
    let mut mass = vec![vec![0.0; dim]; N_CLASSES];
    for (x, y) in xs.iter().zip(ys) {
        let row = &mut mass[y.index()];
        for (j, v) in x.iter() {
            row[j] += v;
        }
    }
    let feature_log_prob = mass
        .into_iter()
        .map(|row| {
            let denom = (row.iter().sum::<f64>() + alpha * dim as f64).ln();
            row.into_iter().map(|m| (m + alpha).ln() - denom).collect()
        })
        .collect();
    Ok(NbModel {
        alpha,
        class_count: class_counts(ys),
        feature_log_prob,
    })
}

impl NbModel {
    pub fn class_log_prior(&self) -> [f64; N_CLASSES] {
        let n: u64 = self.class_count.iter().sum();
        self.class_count
            .map(|c| if c == 0 { f64::NEG_INFINITY } else { (c as f64 / n as f64).ln() })
    }

    /// Unnormalized joint log-likelihood `ln P(k) + sum_j x_j ln P(j | k)`.
    pub fn joint_log_likelihood(&self, x: &SparseVector) -> [f64; N_CLASSES] {
        let prior = self.class_log_prior();
        let mut out = [0.0; N_CLASSES];
        for k in 0..N_CLASSES {
            out[k] = if prior[k] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                prior[k] + x.dot(&self.feature_log_prob[k])
            };
        }
        out
    }
}

impl Classifier for NbModel {
    fn dim(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    /// Normalized log-posteriors.
    fn scores(&self, x: &SparseVector) -> [f64; N_CLASSES] {
        let jll = self.joint_log_likelihood(x);
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + jll.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        jll.map(|v| v - log_norm)
    }
}
