//! App-level sentiment scores, aspect aggregation and monthly trends.

mod aspects;
mod scores;
mod trends;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::labeling::SentimentLabel;

pub use aspects::{
    aggregate_absa, detect_aspect_cues, AbsaReject, AbsaTable, AspectLexicon, AspectProfile,
};
pub use scores::{profiles_by_app, rank_apps, weighted_scores, AppSentimentProfile};
pub use trends::{monthly_trends, AppTrend, MonthPoint, TrendReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aspect {
    UiUx,
    Security,
    SpeedPerformance,
    CustomerService,
    Features,
    TransactionProcessing,
}

impl Aspect {
    pub const ALL: [Aspect; 6] = [
        Aspect::UiUx,
        Aspect::Security,
        Aspect::SpeedPerformance,
        Aspect::CustomerService,
        Aspect::Features,
        Aspect::TransactionProcessing,
    ];

    /// Wire and report name.
    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::UiUx => "UI/UX",
            Aspect::Security => "Security",
            Aspect::SpeedPerformance => "Speed/Performance",
            Aspect::CustomerService => "Customer Service",
            Aspect::Features => "Features",
            Aspect::TransactionProcessing => "Transaction Processing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// Lexicon file name without extension.
    pub fn file_stem(self) -> &'static str {
        match self {
            Aspect::UiUx => "ui_ux",
            Aspect::Security => "security",
            Aspect::SpeedPerformance => "speed_performance",
            Aspect::CustomerService => "customer_service",
            Aspect::Features => "features",
            Aspect::TransactionProcessing => "transaction_processing",
        }
    }
}

impl std::fmt::Display for Aspect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Aspect {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Aspect {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Aspect::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown aspect {s:?}")))
    }
}

/// Polarity of one aspect within one review, as returned by the ABSA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectPolarityRecord {
    pub review_id: String,
    pub aspect: Aspect,
    pub polarity: SentimentLabel,
    pub confidence: f64,
}

/// Percentage `part / whole * 100`, `None` for an empty whole.
pub(crate) fn percent(part: u64, whole: u64) -> Option<f64> {
    (whole > 0).then(|| part as f64 / whole as f64 * 100.0)
}
