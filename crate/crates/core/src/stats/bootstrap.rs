use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{check_lengths, ConfusionMatrix, Metrics};
use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;
use crate::seed::{derived_rng, Stream};

pub const DEFAULT_RESAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSelector {
    Accuracy,
    WeightedPrecision,
    WeightedRecall,
    WeightedF1,
    MacroF1,
}

impl MetricSelector {
    pub fn name(self) -> &'static str {
        match self {
            MetricSelector::Accuracy => "accuracy",
            MetricSelector::WeightedPrecision => "weighted_precision",
            MetricSelector::WeightedRecall => "weighted_recall",
            MetricSelector::WeightedF1 => "weighted_f1",
            MetricSelector::MacroF1 => "macro_f1",
        }
    }

    pub fn select(self, m: &Metrics) -> f64 {
        match self {
            MetricSelector::Accuracy => m.accuracy,
            MetricSelector::WeightedPrecision => m.weighted_precision,
            MetricSelector::WeightedRecall => m.weighted_recall,
            MetricSelector::WeightedF1 => m.weighted_f1,
            MetricSelector::MacroF1 => m.macro_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub metric: MetricSelector,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

/// Percentile with linear interpolation at `h = (len - 1) q` of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap over (true, predicted) pairs. Resample `b` draws its
/// indices from its own derived seed, so the parallel loop matches a serial
/// one exactly.
pub fn bootstrap_ci(
    y_true: &[SentimentLabel],
    y_pred: &[SentimentLabel],
    metric: MetricSelector,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    check_lengths(y_true, y_pred)?;
    if resamples < 100 {
        return Err(Error::contract(format!("need at least 100 resamples, got {resamples}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::contract(format!("confidence level must be in (0, 1), got {level}")));
    }
    let n = y_true.len();
    let pairs: Vec<(usize, usize)> = y_true.iter().zip(y_pred).map(|(t, p)| (t.index(), p.index())).collect();
    let point = metric.select(&Metrics::from_confusion(&ConfusionMatrix::from_labels(y_true, y_pred)?));
    let mut values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = derived_rng(seed, Stream::Bootstrap, b as u64);
            let mut cm = ConfusionMatrix::default();
            for _ in 0..n {
                let (t, p) = pairs[rng.gen_range(0..n)];
                cm.0[t][p] += 1;
            }
            metric.select(&Metrics::from_confusion(&cm))
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        metric,
        point,
        lower: percentile(&values, tail),
        upper: percentile(&values, 1.0 - tail),
        resamples,
        level,
        seed,
    })
}
