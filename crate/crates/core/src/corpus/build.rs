use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::normalize::{Normalizer, StopWords};
use super::script::{detect_language, LanguageThresholds};
use super::{CleanReview, LanguageTag, RawReview};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Allowed app slugs; empty accepts any.
    pub apps: Vec<String>,
    pub language: LanguageThresholds,
    /// Records with fewer letter tokens than this after cleaning are noise.
    pub min_tokens: usize,
    /// Directory holding replacement `en.txt` / `bn.txt` stop-word lists.
    pub stopwords_dir: Option<PathBuf>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            apps: Vec::new(),
            language: LanguageThresholds::default(),
            min_tokens: 2,
            stopwords_dir: None,
        }
    }
}

impl CorpusConfig {
    pub fn normalizer(&self) -> Result<Normalizer> {
        Ok(Normalizer::new(match &self.stopwords_dir {
            Some(dir) => StopWords::from_dir(dir)?,
            None => StopWords::default(),
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropStage {
    Duplicate,
    Noisy,
    Language,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropEntry {
    pub review_id: String,
    pub app_id: String,
    pub stage: DropStage,
    pub reason: String,
}

impl DropEntry {
    fn new(review: &RawReview, stage: DropStage, reason: impl Into<String>) -> Self {
        Self {
            review_id: review.review_id.clone(),
            app_id: review.app_id.clone(),
            stage,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupeOutcome {
    pub kept: Vec<RawReview>,
    pub dropped: Vec<DropEntry>,
}

fn letter_tokens(normalizer: &Normalizer, text: &str) -> usize {
    normalizer
        .clean_tokens(text)
        .iter()
        .filter(|t| t.chars().any(char::is_alphabetic))
        .count()
}

/// Remove duplicate and noisy records, keeping input order.
///
/// Two records are duplicates when they share `(app_id, text, rating)`
/// exactly; the first one in file order survives. A record is noisy when its
/// cleaned text (lowercased, URLs and emoji removed, before stop-word
/// filtering) holds fewer than `min_tokens` tokens with a letter of any
/// script.
pub fn dedupe(reviews: &[RawReview], normalizer: &Normalizer, min_tokens: usize) -> DedupeOutcome {
    let mut seen: HashSet<(&str, &str, u8)> = HashSet::new();
    let mut unique = Vec::with_capacity(reviews.len());
    let mut out = DedupeOutcome::default();
    for review in reviews {
        if seen.insert((&review.app_id, &review.text, review.rating)) {
            unique.push(review);
        } else {
            out.dropped.push(DropEntry::new(
                review,
                DropStage::Duplicate,
                "duplicate of an earlier (app_id, text, rating)",
            ));
        }
    }
    let counts: Vec<usize> = unique
        .par_iter()
        .map(|r| letter_tokens(normalizer, &r.text))
        .collect();
    for (review, n) in unique.into_iter().zip(counts) {
        if n < min_tokens {
            out.dropped.push(DropEntry::new(
                review,
                DropStage::Noisy,
                format!("{n} token(s) after cleaning, minimum {min_tokens}"),
            ));
        } else {
            out.kept.push(review.clone());
        }
    }
    out
}

/// Per-app funnel counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AppStats {
    pub app_id: String,
    pub raw_count: usize,
    /// After duplicate and noise removal.
    pub deduped_count: usize,
    /// After dropping reviews that are neither English nor Bangla.
    pub bilingual_count: usize,
    /// Final reviews with non-empty normalized text.
    pub clean_count: usize,
    pub english_count: usize,
    pub bangla_count: usize,
    /// Mean star rating over the clean reviews; `None` when there are none.
    pub avg_rating: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub apps: Vec<AppStats>,
    pub totals: AppStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusBuild {
    pub clean: Vec<CleanReview>,
    pub stats: CorpusStats,
    pub drops: Vec<DropEntry>,
}

#[derive(Default)]
struct Tally {
    raw: usize,
    deduped: usize,
    bilingual: usize,
    clean: usize,
    english: usize,
    bangla: usize,
    rating_sum: u64,
}

impl Tally {
    fn into_stats(self, app_id: String) -> AppStats {
        AppStats {
            app_id,
            raw_count: self.raw,
            deduped_count: self.deduped,
            bilingual_count: self.bilingual,
            clean_count: self.clean,
            english_count: self.english,
            bangla_count: self.bangla,
            avg_rating: (self.clean > 0).then(|| self.rating_sum as f64 / self.clean as f64),
        }
    }
}

/// Run the cleaning funnel: dedupe (duplicates, noise), language detection
/// (drop anything not English or Bangla), normalization (drop empties).
///
/// Every input review ends up either in `clean` or in `drops`, exactly once.
pub fn build_corpus(raws: &[RawReview], config: &CorpusConfig, normalizer: &Normalizer) -> CorpusBuild {
    let DedupeOutcome { kept, dropped } = dedupe(raws, normalizer, config.min_tokens);
    let mut drops = dropped;

    let processed: Vec<(LanguageTag, Option<String>)> = kept
        .par_iter()
        .map(|r| {
            let lang = detect_language(&r.text, &config.language);
            let text = (lang != LanguageTag::Other).then(|| normalizer.normalize(&r.text, lang));
            (lang, text)
        })
        .collect();

    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for app in &config.apps {
        tallies.entry(app.as_str()).or_default();
    }
    for r in raws {
        tallies.entry(r.app_id.as_str()).or_default().raw += 1;
    }
    for r in &kept {
        tallies.get_mut(r.app_id.as_str()).expect("tallied").deduped += 1;
    }

    let mut language_drops = Vec::new();
    let mut empty_drops = Vec::new();
    let mut clean = Vec::with_capacity(kept.len());
    for (review, (language, text)) in kept.iter().zip(processed) {
        let tally = tallies.get_mut(review.app_id.as_str()).expect("tallied");
        let Some(normalized_text) = text else {
            language_drops.push(DropEntry::new(review, DropStage::Language, "not English or Bangla"));
            continue;
        };
        tally.bilingual += 1;
        if normalized_text.is_empty() {
            empty_drops.push(DropEntry::new(review, DropStage::Empty, "empty after normalization"));
            continue;
        }
        tally.clean += 1;
        tally.rating_sum += u64::from(review.rating);
        match language {
            LanguageTag::English => tally.english += 1,
            LanguageTag::Bangla => tally.bangla += 1,
            LanguageTag::Other => unreachable!(),
        }
        clean.push(CleanReview {
            review: review.clone(),
            language,
            normalized_text,
        });
    }
    drops.extend(language_drops);
    drops.extend(empty_drops);

    // Configured apps first in configured order, then any others by slug.
    let mut order: Vec<&str> = config.apps.iter().map(String::as_str).collect();
    order.extend(tallies.keys().filter(|k| !config.apps.iter().any(|a| a == *k)));
    let mut total = Tally::default();
    let mut apps = Vec::with_capacity(order.len());
    for app in order {
        let t = tallies.remove(app).unwrap_or_default();
        total.raw += t.raw;
        total.deduped += t.deduped;
        total.bilingual += t.bilingual;
        total.clean += t.clean;
        total.english += t.english;
        total.bangla += t.bangla;
        total.rating_sum += t.rating_sum;
        apps.push(t.into_stats(app.to_string()));
    }
    CorpusBuild {
        clean,
        stats: CorpusStats {
            apps,
            totals: total.into_stats("total".into()),
        },
        drops,
    }
}
