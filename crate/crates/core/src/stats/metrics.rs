use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;
use crate::models::N_CLASSES;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; N_CLASSES]; N_CLASSES]);

impl ConfusionMatrix {
    pub fn from_labels(y_true: &[SentimentLabel], y_pred: &[SentimentLabel]) -> Result<Self> {
        check_lengths(y_true, y_pred)?;
        let mut m = [[0u64; N_CLASSES]; N_CLASSES];
        for (t, p) in y_true.iter().zip(y_pred) {
            m[t.index()][p.index()] += 1;
        }
        Ok(Self(m))
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..N_CLASSES).map(|k| self.0[k][k]).sum()
    }

    pub fn support(&self, k: usize) -> u64 {
        self.0[k].iter().sum()
    }

    pub fn predicted(&self, k: usize) -> u64 {
        self.0.iter().map(|row| row[k]).sum()
    }
}

pub(crate) fn check_lengths(y_true: &[SentimentLabel], y_pred: &[SentimentLabel]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::contract(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::contract("no samples to evaluate"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SentimentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: u64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Classes averaged by the macro scores: those occurring in the truth or
    /// the predictions.
    pub macro_classes: Vec<SentimentLabel>,
    /// Ratios that were 0/0 and reported as 0, e.g. `precision(neutral)`.
    pub undefined: Vec<String>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let n = cm.total();
        let mut per_class = Vec::with_capacity(N_CLASSES);
        let mut undefined = Vec::new();
        for k in 0..N_CLASSES {
            let label = SentimentLabel::from_index(k).expect("class index");
            let tp = cm.0[k][k];
            let support = cm.support(k);
            let predicted = cm.predicted(k);
            let precision = ratio(tp, predicted).unwrap_or_else(|| {
                undefined.push(format!("precision({label})"));
                0.0
            });
            let recall = ratio(tp, support).unwrap_or_else(|| {
                undefined.push(format!("recall({label})"));
                0.0
            });
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            per_class.push(ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support,
                predicted,
            });
        }
        let weighted = |f: fn(&ClassMetrics) -> f64| -> f64 {
            if n == 0 {
                return 0.0;
            }
            per_class.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / n as f64
        };
        let present: Vec<&ClassMetrics> = per_class
            .iter()
            .filter(|c| c.support > 0 || c.predicted > 0)
            .collect();
        let macro_avg = |f: fn(&ClassMetrics) -> f64| -> f64 {
            if present.is_empty() {
                return 0.0;
            }
            present.iter().map(|c| f(c)).sum::<f64>() / present.len() as f64
        };
        Metrics {
            n,
            accuracy: ratio(cm.correct(), n).unwrap_or(0.0),
            weighted_precision: weighted(|c| c.precision),
            weighted_recall: weighted(|c| c.recall),
            weighted_f1: weighted(|c| c.f1),
            macro_precision: macro_avg(|c| c.precision),
            macro_recall: macro_avg(|c| c.recall),
            macro_f1: macro_avg(|c| c.f1),
            macro_classes: present.iter().map(|c| c.label).collect(),
            per_class,
            undefined,
        }
    }
}

pub fn classification_metrics(
    y_true: &[SentimentLabel],
    y_pred: &[SentimentLabel],
) -> Result<(ConfusionMatrix, Metrics)> {
    let cm = ConfusionMatrix::from_labels(y_true, y_pred)?;
    let metrics = Metrics::from_confusion(&cm);
    Ok((cm, metrics))
}

pub fn macro_f1(y_true: &[SentimentLabel], y_pred: &[SentimentLabel]) -> Result<f64> {
    Ok(classification_metrics(y_true, y_pred)?.1.macro_f1)
}
