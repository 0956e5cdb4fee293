use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RawReview;
use crate::error::{Error, Result};

/// A dump line that did not become a [`RawReview`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line number in the dump.
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub reviews: Vec<RawReview>,
    pub rejects: Vec<Reject>,
}

#[derive(Deserialize)]
struct WireReview {
    review_id: String,
    app_id: String,
    text: String,
    rating: i64,
    posted_at: String,
    thumbs_up: i64,
    #[serde(default)]
    app_version: Option<String>,
}

fn validate(wire: WireReview, known_apps: &[String]) -> std::result::Result<RawReview, String> {
    if wire.review_id.is_empty() {
        return Err("empty review_id".into());
    }
    if !(1..=5).contains(&wire.rating) {
        return Err("rating out of range".into());
    }
    if wire.thumbs_up < 0 {
        return Err("negative thumbs_up".into());
    }
    if !known_apps.is_empty() && !known_apps.iter().any(|a| *a == wire.app_id) {
        return Err(format!("unknown app_id {:?}", wire.app_id));
    }
    let posted_at = DateTime::parse_from_rfc3339(&wire.posted_at)
        .map_err(|e| format!("invalid posted_at: {e}"))?
        .with_timezone(&Utc);
    Ok(RawReview {
        review_id: wire.review_id,
        app_id: wire.app_id,
        text: wire.text,
        rating: wire.rating as u8,
        posted_at,
        thumbs_up: wire.thumbs_up as u64,
        app_version: wire.app_version.filter(|v| !v.is_empty()),
    })
}

/// Parse a line-delimited JSON review dump.
///
/// Records come back in input order. Lines that are not valid records land in
/// [`ParseOutcome::rejects`] with a reason; blank lines are skipped. When
/// `known_apps` is non-empty, records for other apps are rejected. A repeated
/// `review_id` rejects the later record.
pub fn parse_reviews<R: BufRead>(reader: R, known_apps: &[String]) -> std::io::Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                out.rejects.push(Reject {
                    line: line_no,
                    id: None,
                    reason: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        let id = value
            .get("review_id")
            .and_then(Value::as_str)
            .map(str::to_string);
        let parsed = serde_json::from_value::<WireReview>(value)
            .map_err(|e| format!("malformed record: {e}"))
            .and_then(|w| validate(w, known_apps));
        match parsed {
            Ok(review) if !seen.insert(review.review_id.clone()) => out.rejects.push(Reject {
                line: line_no,
                id,
                reason: "duplicate review_id".into(),
            }),
            Ok(review) => out.reviews.push(review),
            Err(reason) => out.rejects.push(Reject {
                line: line_no,
                id,
                reason,
            }),
        }
    }
    Ok(out)
}

/// Open and parse a dump file. A missing or unreadable file is an I/O error.
pub fn read_reviews(path: &Path, known_apps: &[String]) -> Result<ParseOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reviews(std::io::BufReader::new(file), known_apps).map_err(|e| Error::io(path, e))
}
