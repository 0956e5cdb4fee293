use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{percent, Aspect, AspectPolarityRecord};
use crate::corpus::{CleanReview, LanguageTag, Normalizer};
use crate::error::{Error, Result};

const SHIPPED: [(Aspect, &str, &str); 6] = [
    (
        Aspect::UiUx,
        include_str!("../../data/aspects/en/ui_ux.txt"),
        include_str!("../../data/aspects/bn/ui_ux.txt"),
    ),
    (
        Aspect::Security,
        include_str!("../../data/aspects/en/security.txt"),
        include_str!("../../data/aspects/bn/security.txt"),
    ),
    (
        Aspect::SpeedPerformance,
        include_str!("../../data/aspects/en/speed_performance.txt"),
        include_str!("../../data/aspects/bn/speed_performance.txt"),
    ),
    (
        Aspect::CustomerService,
        include_str!("../../data/aspects/en/customer_service.txt"),
        include_str!("../../data/aspects/bn/customer_service.txt"),
    ),
    (
        Aspect::Features,
        include_str!("../../data/aspects/en/features.txt"),
        include_str!("../../data/aspects/bn/features.txt"),
    ),
    (
        Aspect::TransactionProcessing,
        include_str!("../../data/aspects/en/transaction_processing.txt"),
        include_str!("../../data/aspects/bn/transaction_processing.txt"),
    ),
];

/// Cue phrases per aspect: one or two normalized tokens each.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectLexicon {
    cues: BTreeMap<Aspect, Vec<Vec<String>>>,
}

impl Default for AspectLexicon {
    fn default() -> Self {
        let mut lexicon = Self { cues: BTreeMap::new() };
        for (aspect, en, bn) in SHIPPED {
            lexicon.add_lines(aspect, en);
            lexicon.add_lines(aspect, bn);
        }
        lexicon
    }
}

impl AspectLexicon {
    /// Reads `{dir}/{en,bn}/{stem}.txt`; a missing file means no cues for that
    /// aspect and language.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut lexicon = Self { cues: BTreeMap::new() };
        for aspect in Aspect::ALL {
            for lang in ["en", "bn"] {
                let path = dir.join(lang).join(format!("{}.txt", aspect.file_stem()));
                match std::fs::read_to_string(&path) {
                    Ok(text) => lexicon.add_lines(aspect, &text),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                    Err(e) => return Err(Error::io(&path, e)),
                }
            }
        }
        Ok(lexicon)
    }

    fn add_lines(&mut self, aspect: Aspect, text: &str) {
        let entry = self.cues.entry(aspect).or_default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if (1..=2).contains(&tokens.len()) && !entry.contains(&tokens) {
                entry.push(tokens);
            }
        }
    }

    pub fn cues(&self, aspect: Aspect) -> &[Vec<String>] {
        self.cues.get(&aspect).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cues that would not survive normalization as written (stop words,
    /// punctuation, case); such a cue can never match.
    pub fn unreachable_cues(&self, normalizer: &Normalizer) -> Vec<(Aspect, String)> {
        let mut out = Vec::new();
        for (aspect, cues) in &self.cues {
            for cue in cues {
                let phrase = cue.join(" ");
                let survives = [LanguageTag::English, LanguageTag::Bangla]
                    .into_iter()
                    .any(|lang| normalizer.normalize(&phrase, lang) == phrase);
                if !survives {
                    out.push((*aspect, phrase));
                }
            }
        }
        out
    }
}

/// Aspects, in enum order, with at least one cue among the review's
/// normalized tokens (single tokens or adjacent pairs).
pub fn detect_aspect_cues(review: &CleanReview, lexicon: &AspectLexicon) -> Vec<Aspect> {
    let tokens: Vec<&str> = review.normalized_text.split(' ').filter(|t| !t.is_empty()).collect();
    let unigrams: HashSet<&str> = tokens.iter().copied().collect();
    let bigrams: HashSet<(&str, &str)> = tokens.windows(2).map(|w| (w[0], w[1])).collect();
    Aspect::ALL
        .into_iter()
        .filter(|aspect| {
            lexicon.cues(*aspect).iter().any(|cue| match cue.as_slice() {
                [one] => unigrams.contains(one.as_str()),
                [a, b] => bigrams.contains(&(a.as_str(), b.as_str())),
                _ => false,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectProfile {
    pub app_id: String,
    pub aspect: Aspect,
    pub mentions: u64,
    pub negative_share: f64,
    pub neutral_share: f64,
    pub positive_share: f64,
    /// Sum of thumbs-up over the reviews mentioning the aspect.
    pub salience: u64,
    /// This aspect's share of all aspect mentions for the app, in percent.
    pub mention_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsaReject {
    pub review_id: String,
    pub aspect: Aspect,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsaTable {
    /// Sorted by app_id, then aspect order; pairs without mentions omitted.
    pub rows: Vec<AspectProfile>,
    pub rejects: Vec<AbsaReject>,
}

/// Per (app, aspect) polarity shares and salience. Records whose review is
/// unknown, or that repeat a (review, aspect) pair, are rejected.
pub fn aggregate_absa<'a>(
    records: &[AspectPolarityRecord],
    reviews: impl IntoIterator<Item = &'a CleanReview>,
) -> AbsaTable {
    let index: HashMap<&str, &CleanReview> = reviews.into_iter().map(|r| (r.id(), r)).collect();
    let mut seen = HashSet::new();
    let mut rejects = Vec::new();
    // (app, aspect) -> (polarity counts, salience)
    let mut cells: BTreeMap<(&str, Aspect), ([u64; 3], u64)> = BTreeMap::new();
    for rec in records {
        let Some(review) = index.get(rec.review_id.as_str()) else {
            rejects.push(AbsaReject {
                review_id: rec.review_id.clone(),
                aspect: rec.aspect,
                reason: "unknown review_id".into(),
            });
            continue;
        };
        if !seen.insert((rec.review_id.as_str(), rec.aspect)) {
            rejects.push(AbsaReject {
                review_id: rec.review_id.clone(),
                aspect: rec.aspect,
                reason: "duplicate (review, aspect) pair".into(),
            });
            continue;
        }
        let cell = cells.entry((review.review.app_id.as_str(), rec.aspect)).or_default();
        cell.0[rec.polarity.index()] += 1;
        cell.1 += review.review.thumbs_up;
    }
    let mut app_totals: HashMap<&str, u64> = HashMap::new();
    for ((app, _), (counts, _)) in &cells {
        *app_totals.entry(app).or_default() += counts.iter().sum::<u64>();
    }
    let rows = cells
        .into_iter()
        .map(|((app, aspect), (counts, salience))| {
            let mentions: u64 = counts.iter().sum();
            AspectProfile {
                app_id: app.to_string(),
                aspect,
                mentions,
                negative_share: percent(counts[0], mentions).unwrap_or(0.0),
                neutral_share: percent(counts[1], mentions).unwrap_or(0.0),
                positive_share: percent(counts[2], mentions).unwrap_or(0.0),
                salience,
                mention_share: percent(mentions, app_totals[app]).unwrap_or(0.0),
            }
        })
        .collect();
    AbsaTable { rows, rejects }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawReview;
    use crate::labeling::SentimentLabel::{self, *};
    use chrono::{TimeZone, Utc};

    fn clean(id: &str, app: &str, text: &str, thumbs: u64) -> CleanReview {
        CleanReview {
            review: RawReview {
                review_id: id.into(),
                app_id: app.into(),
                text: text.into(),
                rating: 3,
                posted_at: Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap(),
                thumbs_up: thumbs,
                app_version: None,
            },
            language: LanguageTag::English,
            normalized_text: crate::corpus::normalize_text(text, LanguageTag::English),
        }
    }

    fn rec(id: &str, aspect: Aspect, polarity: SentimentLabel) -> AspectPolarityRecord {
        AspectPolarityRecord {
            review_id: id.into(),
            aspect,
            polarity,
            confidence: 0.8,
        }
    }

    #[test]
    fn cue_detection() {
        let lex = AspectLexicon::default();
        let r = clean("1", "a", "app is slow and crashes", 0);
        assert_eq!(detect_aspect_cues(&r, &lex), vec![Aspect::SpeedPerformance]);
        let r = clean("2", "a", "OTP never arrives, and the design is dated", 0);
        assert_eq!(detect_aspect_cues(&r, &lex), vec![Aspect::UiUx, Aspect::Security]);
        let r = clean("3", "a", "meh", 0);
        assert!(detect_aspect_cues(&r, &lex).is_empty());
        let r = clean("4", "a", "Customer service never answers", 0);
        assert_eq!(detect_aspect_cues(&r, &lex), vec![Aspect::CustomerService]);
    }

    #[test]
    fn bangla_cues() {
        let lex = AspectLexicon::default();
        let mut r = clean("1", "a", "", 0);
        r.language = LanguageTag::Bangla;
        r.normalized_text = crate::corpus::normalize_text("লেনদেন খুব ধীর", LanguageTag::Bangla);
        assert_eq!(
            detect_aspect_cues(&r, &lex),
            vec![Aspect::SpeedPerformance, Aspect::TransactionProcessing]
        );
    }

    #[test]
    fn shipped_cues_survive_normalization() {
        let lex = AspectLexicon::default();
        assert!(lex.unreachable_cues(&Normalizer::default()).is_empty());
        for a in Aspect::ALL {
            assert!(!lex.cues(a).is_empty(), "{a}");
        }
    }

    #[test]
    fn lexicon_from_dir_matches_shipped() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/aspects");
        assert_eq!(AspectLexicon::from_dir(&dir).unwrap(), AspectLexicon::default());
    }

    #[test]
    fn shares_and_salience() {
        let reviews = vec![clean("r1", "a", "slow", 5), clean("r2", "a", "slow", 1), clean("r3", "a", "fast", 0)];
        let records = vec![
            rec("r1", Aspect::SpeedPerformance, Negative),
            rec("r2", Aspect::SpeedPerformance, Negative),
            rec("r3", Aspect::SpeedPerformance, Positive),
            rec("r1", Aspect::Security, Neutral),
            rec("nope", Aspect::Security, Neutral),
            rec("r1", Aspect::Security, Positive),
        ];
        let table = aggregate_absa(&records, &reviews);
        assert_eq!(table.rows.len(), 2);
        let speed = &table.rows[1];
        assert_eq!(speed.aspect, Aspect::SpeedPerformance);
        assert!((speed.negative_share - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(speed.salience, 6);
        assert_eq!(speed.mention_share, 75.0);
        assert_eq!(table.rows[0].aspect, Aspect::Security);
        assert_eq!(table.rejects.len(), 2);
        for row in &table.rows {
            let sum = row.negative_share + row.neutral_share + row.positive_share;
            assert!((sum - 100.0).abs() < 1e-6);
        }
    }
}
