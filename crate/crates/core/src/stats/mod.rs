//! Splitting, classification metrics, bootstrap intervals and paired tests.

mod bootstrap;
mod mcnemar;
mod metrics;
mod split;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguageTag;
use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;

pub use bootstrap::{bootstrap_ci, percentile, BootstrapCi, MetricSelector, DEFAULT_RESAMPLES};
pub use mcnemar::{chi2_sf_1df, erfc, mcnemar, mcnemar_from_counts, McNemarResult};
pub use metrics::{classification_metrics, macro_f1, ClassMetrics, ConfusionMatrix, Metrics};
pub use split::{stratified_kfold, stratified_split, test_quotas, Folds, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: LanguageTag,
    pub n: u64,
    pub metrics: Metrics,
    pub weighted_f1_ci: BootstrapCi,
}

/// English minus Bangla.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageGap {
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageEval {
    pub rows: Vec<LanguageRow>,
    pub gap: Option<LanguageGap>,
    pub warnings: Vec<String>,
}

/// Metrics on the English and Bangla subsets separately, each with a
/// weighted-F1 bootstrap interval, plus the English minus Bangla gap when
/// both subsets are non-empty.
pub fn language_stratified_eval(
    languages: &[LanguageTag],
    y_true: &[SentimentLabel],
    y_pred: &[SentimentLabel],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<LanguageEval> {
    if languages.len() != y_true.len() || y_true.len() != y_pred.len() {
        return Err(Error::contract(format!(
            "language eval needs equal lengths, got {} tags, {} labels, {} predictions",
            languages.len(),
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for language in [LanguageTag::English, LanguageTag::Bangla] {
        let (t, p): (Vec<SentimentLabel>, Vec<SentimentLabel>) = languages
            .iter()
            .zip(y_true.iter().zip(y_pred))
            .filter(|(l, _)| **l == language)
            .map(|(_, (t, p))| (*t, *p))
            .unzip();
        if t.is_empty() {
            warnings.push(format!("no {language} items in the test set; row omitted"));
            continue;
        }
        let (_, metrics) = classification_metrics(&t, &p)?;
        let weighted_f1_ci = bootstrap_ci(&t, &p, MetricSelector::WeightedF1, resamples, level, seed)?;
        rows.push(LanguageRow {
            language,
            n: t.len() as u64,
            metrics,
            weighted_f1_ci,
        });
    }
    let gap = match rows.as_slice() {
        [en, bn] => Some(LanguageGap {
            accuracy: en.metrics.accuracy - bn.metrics.accuracy,
            weighted_f1: en.metrics.weighted_f1 - bn.metrics.weighted_f1,
            macro_f1: en.metrics.macro_f1 - bn.metrics.macro_f1,
        }),
        _ => None,
    };
    Ok(LanguageEval { rows, gap, warnings })
}
