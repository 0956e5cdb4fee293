//! Star-derived labels, consensus with an external model, and Cohen's kappa.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::client::ModelLabelRecord;
use crate::corpus::{CleanReview, LanguageTag};
use crate::error::{Error, Result};

/// Three-way sentiment. The derived order `Negative < Neutral < Positive` is
/// also the class-index order used by every model and matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        Self::ALL.get(idx).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Positive => "positive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "negative" => Some(SentimentLabel::Negative),
            "neutral" => Some(SentimentLabel::Neutral),
            "positive" => Some(SentimentLabel::Positive),
            _ => None,
        }
    }
}

impl std::fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1-2 stars negative, 3 neutral, 4-5 positive.
pub fn star_to_sentiment(rating: u8) -> Result<SentimentLabel> {
    match rating {
        1 | 2 => Ok(SentimentLabel::Negative),
        3 => Ok(SentimentLabel::Neutral),
        4 | 5 => Ok(SentimentLabel::Positive),
        other => Err(Error::contract(format!("rating {other} outside 1..=5"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledReview {
    #[serde(flatten)]
    pub review: CleanReview,
    pub star_label: SentimentLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_label: Option<SentimentLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_confidence: Option<f64>,
    /// `Some(star == model)` when a model label exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus: Option<bool>,
}

impl LabeledReview {
    pub fn star_only(review: CleanReview) -> Result<Self> {
        let star_label = star_to_sentiment(review.review.rating)?;
        Ok(Self {
            review,
            star_label,
            model_label: None,
            model_confidence: None,
            consensus: None,
        })
    }

    pub fn id(&self) -> &str {
        self.review.id()
    }

    pub fn language(&self) -> LanguageTag {
        self.review.language
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinOutcome {
    pub labeled: Vec<LabeledReview>,
    /// Corpus reviews that got no model label, in corpus order.
    pub missing: Vec<String>,
    /// Label records whose review_id is not in the corpus, in record order.
    pub unknown: Vec<String>,
}

/// Attach external model labels to corpus reviews by `review_id`.
///
/// A review_id that appears twice in `labels` is a validation error.
pub fn join_model_labels(corpus: &[CleanReview], labels: &[ModelLabelRecord]) -> Result<JoinOutcome> {
    let mut by_id: HashMap<&str, &ModelLabelRecord> = HashMap::with_capacity(labels.len());
    for rec in labels {
        if by_id.insert(rec.review_id.as_str(), rec).is_some() {
            return Err(Error::Validation(format!(
                "duplicate model label for review_id {:?}",
                rec.review_id
            )));
        }
    }
    let corpus_ids: HashSet<&str> = corpus.iter().map(CleanReview::id).collect();
    let unknown = labels
        .iter()
        .filter(|r| !corpus_ids.contains(r.review_id.as_str()))
        .map(|r| r.review_id.clone())
        .collect();

    let mut out = JoinOutcome {
        unknown,
        ..JoinOutcome::default()
    };
    for review in corpus {
        let mut labeled = LabeledReview::star_only(review.clone())?;
        match by_id.get(review.id()) {
            Some(rec) => {
                labeled.model_label = Some(rec.label);
                labeled.model_confidence = Some(rec.confidence);
                labeled.consensus = Some(rec.label == labeled.star_label);
            }
            None => out.missing.push(review.id().to_string()),
        }
        out.labeled.push(labeled);
    }
    Ok(out)
}

/// Split into (agreeing, disagreeing), preserving order.
///
/// Every element must carry a model label.
pub fn consensus_filter(labeled: Vec<LabeledReview>) -> Result<(Vec<LabeledReview>, Vec<LabeledReview>)> {
    if let Some(bad) = labeled.iter().find(|l| l.model_label.is_none()) {
        return Err(Error::contract(format!(
            "review {} has no model label",
            bad.id()
        )));
    }
    Ok(labeled
        .into_iter()
        .partition(|l| l.model_label == Some(l.star_label)))
}

/// Per-language consensus counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusCounts {
    pub labeled: usize,
    pub kept: usize,
    pub dropped: usize,
}

pub fn consensus_by_language(
    kept: &[LabeledReview],
    dropped: &[LabeledReview],
) -> BTreeMap<LanguageTag, ConsensusCounts> {
    let mut out: BTreeMap<LanguageTag, ConsensusCounts> = BTreeMap::new();
    for l in kept {
        let c = out.entry(l.language()).or_default();
        c.labeled += 1;
        c.kept += 1;
    }
    for l in dropped {
        let c = out.entry(l.language()).or_default();
        c.labeled += 1;
        c.dropped += 1;
    }
    out
}

/// Rows index rater A's label, columns rater B's.
pub type AgreementMatrix = [[u64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub p_o: f64,
    pub p_e: f64,
    pub kappa: f64,
    pub n: u64,
    pub agreement_matrix: AgreementMatrix,
    /// Chance agreement was 1 (both raters constant and equal); kappa is
    /// reported as 1.
    pub degenerate: bool,
}

/// Cohen's kappa from a 3x3 agreement matrix: `(p_o - p_e) / (1 - p_e)`.
pub fn kappa_from_matrix(matrix: AgreementMatrix) -> Result<KappaResult> {
    let n: u64 = matrix.iter().flatten().sum();
    if n == 0 {
        return Err(Error::contract("kappa needs at least one rated item"));
    }
    let nf = n as f64;
    let diag: u64 = (0..3).map(|i| matrix[i][i]).sum();
    let p_o = diag as f64 / nf;
    let p_e: f64 = (0..3)
        .map(|c| {
            let row: u64 = matrix[c].iter().sum();
            let col: u64 = matrix.iter().map(|r| r[c]).sum();
            (row as f64 / nf) * (col as f64 / nf)
        })
        .sum();
    // p_e is exactly 1 only when one class holds every rating on both sides.
    let degenerate = (0..3).any(|c| matrix[c][c] == n);
    let kappa = if degenerate {
        1.0
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(KappaResult {
        p_o,
        p_e: if degenerate { 1.0 } else { p_e },
        kappa,
        n,
        agreement_matrix: matrix,
        degenerate,
    })
}

/// Cohen's kappa between two equally long label sequences.
pub fn cohens_kappa(a: &[SentimentLabel], b: &[SentimentLabel]) -> Result<KappaResult> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "kappa inputs differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let mut matrix = [[0u64; 3]; 3];
    for (x, y) in a.iter().zip(b) {
        matrix[x.index()][y.index()] += 1;
    }
    kappa_from_matrix(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SentimentLabel::*;

    fn clean(id: &str, rating: u8, language: LanguageTag) -> CleanReview {
        use chrono::TimeZone;
        CleanReview {
            review: crate::corpus::RawReview {
                review_id: id.into(),
                app_id: "app".into(),
                text: "text".into(),
                rating,
                posted_at: chrono::Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
                thumbs_up: 0,
                app_version: None,
            },
            language,
            normalized_text: "text".into(),
        }
    }

    fn record(id: &str, label: SentimentLabel) -> ModelLabelRecord {
        ModelLabelRecord {
            review_id: id.into(),
            label,
            confidence: 0.9,
            model_id: "m".into(),
        }
    }

    #[test]
    fn join_reports_missing_and_unknown() {
        let corpus = vec![
            clean("a", 5, LanguageTag::English),
            clean("b", 1, LanguageTag::Bangla),
            clean("c", 3, LanguageTag::English),
        ];
        let labels = vec![record("b", Positive), record("a", Positive), record("zz", Neutral)];
        let out = join_model_labels(&corpus, &labels).unwrap();
        assert_eq!(out.missing, vec!["c".to_string()]);
        assert_eq!(out.unknown, vec!["zz".to_string()]);
        assert_eq!(out.labeled[0].consensus, Some(true));
        assert_eq!(out.labeled[1].consensus, Some(false));
        assert_eq!(out.labeled[2].model_label, None);

        let with_labels: Vec<_> = out.labeled.into_iter().filter(|l| l.model_label.is_some()).collect();
        let (kept, dropped) = consensus_filter(with_labels).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(dropped[0].id(), "b");
        let by_lang = consensus_by_language(&kept, &dropped);
        assert_eq!(by_lang[&LanguageTag::Bangla], ConsensusCounts { labeled: 1, kept: 0, dropped: 1 });
    }

    #[test]
    fn duplicate_label_rejected() {
        let corpus = vec![clean("a", 5, LanguageTag::English)];
        let err = join_model_labels(&corpus, &[record("a", Positive), record("a", Negative)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn consensus_needs_model_labels() {
        let unlabeled = LabeledReview::star_only(clean("a", 4, LanguageTag::English)).unwrap();
        assert!(consensus_filter(vec![unlabeled]).is_err());
    }

    #[test]
    fn star_mapping() {
        assert_eq!(star_to_sentiment(1).unwrap(), Negative);
        assert_eq!(star_to_sentiment(2).unwrap(), Negative);
        assert_eq!(star_to_sentiment(3).unwrap(), Neutral);
        assert_eq!(star_to_sentiment(4).unwrap(), Positive);
        assert_eq!(star_to_sentiment(5).unwrap(), Positive);
        assert!(matches!(star_to_sentiment(0), Err(Error::Contract(_))));
        assert!(matches!(star_to_sentiment(6), Err(Error::Contract(_))));
    }

    #[test]
    fn kappa_perfect_agreement() {
        let a = [Positive, Negative, Neutral, Positive];
        let k = cohens_kappa(&a, &a).unwrap();
        assert_eq!(k.kappa, 1.0);
        assert!(!k.degenerate);
    }

    #[test]
    fn kappa_chance_level() {
        let a = [Positive, Positive, Negative, Negative];
        let b = [Positive, Negative, Negative, Positive];
        let k = cohens_kappa(&a, &b).unwrap();
        assert_eq!(k.p_o, 0.5);
        assert_eq!(k.p_e, 0.5);
        assert_eq!(k.kappa, 0.0);
        assert_eq!(k.n, 4);
    }

    #[test]
    fn kappa_degenerate_constant_raters() {
        let a = [Neutral; 5];
        let k = cohens_kappa(&a, &a).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.kappa, 1.0);
    }

    #[test]
    fn kappa_contract_errors() {
        assert!(matches!(cohens_kappa(&[], &[]), Err(Error::Contract(_))));
        assert!(matches!(
            cohens_kappa(&[Positive], &[Positive, Negative]),
            Err(Error::Contract(_))
        ));
    }

    fn label() -> impl Strategy<Value = SentimentLabel> {
        (0usize..3).prop_map(|i| SentimentLabel::from_index(i).unwrap())
    }

    proptest! {
        #[test]
        fn kappa_symmetric(pairs in prop::collection::vec((label(), label()), 1..60)) {
            let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let ab = cohens_kappa(&a, &b).unwrap();
            let ba = cohens_kappa(&b, &a).unwrap();
            prop_assert!((ab.kappa - ba.kappa).abs() < 1e-12);
        }

        #[test]
        fn kappa_self_agreement(a in prop::collection::vec(label(), 2..60)) {
            prop_assume!(a.iter().any(|x| *x != a[0]));
            prop_assert!((cohens_kappa(&a, &a).unwrap().kappa - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kappa_permutation_invariant(
            pairs in prop::collection::vec((label(), label()), 1..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut crate::seed::rng(seed));
            let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let (sa, sb): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            let k1 = cohens_kappa(&a, &b).unwrap();
            let k2 = cohens_kappa(&sa, &sb).unwrap();
            prop_assert_eq!(k1.kappa.to_bits(), k2.kappa.to_bits());
        }

        #[test]
        fn kappa_bounded(pairs in prop::collection::vec((label(), label()), 1..60)) {
            let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let k = cohens_kappa(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&k.kappa));
            prop_assert_eq!(k.agreement_matrix.iter().flatten().sum::<u64>(), k.n);
        }
    }
}
