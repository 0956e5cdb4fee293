//! Review dumps: parsing, deduplication, script-based language detection,
//! text normalization and per-app dataset statistics.

mod build;
mod normalize;
mod parse;
pub mod script;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use build::{
    build_corpus, dedupe, AppStats, CorpusBuild, CorpusConfig, CorpusStats, DedupeOutcome,
    DropEntry, DropStage,
};
pub use normalize::{normalize_text, Normalizer, StopWords};
pub use parse::{parse_reviews, read_reviews, ParseOutcome, Reject};
pub use script::{detect_language, LanguageThresholds};

/// One scraped review as it appears in the input dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReview {
    pub review_id: String,
    pub app_id: String,
    pub text: String,
    /// Star rating, always in `1..=5`.
    pub rating: u8,
    pub posted_at: DateTime<Utc>,
    pub thumbs_up: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app_version: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    English,
    Bangla,
    Other,
}

impl LanguageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::English => "english",
            LanguageTag::Bangla => "bangla",
            LanguageTag::Other => "other",
        }
    }
}

impl std::fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A review that survived cleaning. `language` is never [`LanguageTag::Other`]
/// and `normalized_text` is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReview {
    #[serde(flatten)]
    pub review: RawReview,
    pub language: LanguageTag,
    pub normalized_text: String,
}

impl CleanReview {
    pub fn id(&self) -> &str {
        &self.review.review_id
    }
}
