use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::percent;
use crate::error::{Error, Result};
use crate::labeling::{LabeledReview, SentimentLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppSentimentProfile {
    pub app_id: String,
    pub n_reviews: u64,
    /// Percentages; all three are `None` when `total_weight` is zero.
    pub pss: Option<f64>,
    pub nss: Option<f64>,
    pub neutral_share: Option<f64>,
    /// Unweighted mean rating of the scored reviews.
    pub avg_rating: f64,
    /// Mean rating over the app's whole cleaned corpus, when known.
    #[serde(default)]
    pub corpus_avg_rating: Option<f64>,
    pub total_weight: u64,
    pub degenerate: bool,
}

/// Thumbs-up weighted sentiment shares for one app:
/// `PSS = sum of thumbs over positive reviews / sum over all reviews * 100`,
/// likewise NSS, and neutral is the remainder. Reviews without thumbs carry
/// no weight. The label used is `star_label`, which for consensus reviews
/// equals the model label.
pub fn weighted_scores(reviews: &[LabeledReview]) -> Result<AppSentimentProfile> {
    let first = reviews
        .first()
        .ok_or_else(|| Error::contract("cannot score an empty review set"))?;
    let app_id = &first.review.review.app_id;
    let mut weight = [0u64; 3];
    let mut rating_sum = 0u64;
    for r in reviews {
        if &r.review.review.app_id != app_id {
            return Err(Error::contract(format!(
                "mixed apps in one profile: {app_id} and {}",
                r.review.review.app_id
            )));
        }
        weight[r.star_label.index()] += r.review.review.thumbs_up;
        rating_sum += u64::from(r.review.review.rating);
    }
    let total: u64 = weight.iter().sum();
    let pss = percent(weight[SentimentLabel::Positive.index()], total);
    let nss = percent(weight[SentimentLabel::Negative.index()], total);
    Ok(AppSentimentProfile {
        app_id: app_id.clone(),
        n_reviews: reviews.len() as u64,
        pss,
        nss,
        neutral_share: pss.zip(nss).map(|(p, n)| 100.0 - p - n),
        avg_rating: rating_sum as f64 / reviews.len() as f64,
        corpus_avg_rating: None,
        total_weight: total,
        degenerate: total == 0,
    })
}

/// One profile per app, in app_id order.
pub fn profiles_by_app(reviews: &[LabeledReview]) -> Result<Vec<AppSentimentProfile>> {
    let mut groups: BTreeMap<&str, Vec<LabeledReview>> = BTreeMap::new();
    for r in reviews {
        groups.entry(r.review.review.app_id.as_str()).or_default().push(r.clone());
    }
    groups.values().map(|g| weighted_scores(g)).collect()
}

/// PSS descending; apps without a PSS come last by average rating
/// descending; remaining ties by app_id.
pub fn rank_apps(mut profiles: Vec<AppSentimentProfile>) -> Vec<AppSentimentProfile> {
    profiles.sort_by(|a, b| {
        let by_score = match (a.pss, b.pss) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => b.avg_rating.total_cmp(&a.avg_rating),
        };
        by_score.then_with(|| a.app_id.cmp(&b.app_id))
    });
    profiles
}
