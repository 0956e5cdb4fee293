use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::labeling::LabeledReview;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthPoint {
    /// `YYYY-MM`, UTC.
    pub month: String,
    pub total: u64,
    pub negative: u64,
    pub neutral: u64,
    pub positive: u64,
    /// Shares of `total`; all zero for an empty month.
    pub negative_share: f64,
    pub neutral_share: f64,
    pub positive_share: f64,
    /// Some review this month carries an app version not seen in an earlier
    /// month. An app's first month with a version is not marked. On the
    /// overall series: any app is marked.
    pub version_change: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppTrend {
    pub app_id: String,
    pub points: Vec<MonthPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub months: Vec<String>,
    pub overall: Vec<MonthPoint>,
    pub apps: Vec<AppTrend>,
}

type MonthKey = (i32, u32);

fn month_key(r: &LabeledReview) -> MonthKey {
    let t = r.review.review.posted_at;
    (t.year(), t.month())
}

fn month_range(first: MonthKey, last: MonthKey) -> Vec<MonthKey> {
    let mut out = Vec::new();
    let (mut y, mut m) = first;
    while (y, m) <= last {
        out.push((y, m));
        if m == 12 {
            y += 1;
            m = 1;
        } else {
            m += 1;
        }
    }
    out
}

fn point(month: MonthKey, counts: [u64; 3], version_change: bool) -> MonthPoint {
    let total: u64 = counts.iter().sum();
    let share = |c: u64| if total == 0 { 0.0 } else { c as f64 / total as f64 };
    MonthPoint {
        month: format!("{:04}-{:02}", month.0, month.1),
        total,
        negative: counts[0],
        neutral: counts[1],
        positive: counts[2],
        negative_share: share(counts[0]),
        neutral_share: share(counts[1]),
        positive_share: share(counts[2]),
        version_change,
    }
}

/// Monthly label counts and shares per app and overall, from the first to
/// the last month present, with empty months filled in. Labels are the
/// reviews' `star_label`.
pub fn monthly_trends(reviews: &[LabeledReview]) -> TrendReport {
    let mut by_app: BTreeMap<&str, BTreeMap<MonthKey, ([u64; 3], BTreeSet<&str>)>> = BTreeMap::new();
    for r in reviews {
        let cell = by_app
            .entry(r.review.review.app_id.as_str())
            .or_default()
            .entry(month_key(r))
            .or_default();
        cell.0[r.star_label.index()] += 1;
        if let Some(v) = &r.review.review.app_version {
            cell.1.insert(v.as_str());
        }
    }
    let keys: BTreeSet<MonthKey> = by_app.values().flat_map(|m| m.keys().copied()).collect();
    let months = match (keys.first(), keys.last()) {
        (Some(&first), Some(&last)) => month_range(first, last),
        _ => Vec::new(),
    };

    let mut overall_counts = vec![[0u64; 3]; months.len()];
    let mut overall_change = vec![false; months.len()];
    let mut apps = Vec::new();
    for (app, cells) in &by_app {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut points = Vec::with_capacity(months.len());
        for (i, key) in months.iter().enumerate() {
            let (counts, versions) = cells.get(key).cloned().unwrap_or_default();
            let change = !seen.is_empty() && versions.iter().any(|v| !seen.contains(v));
            seen.extend(versions.iter().copied());
            for k in 0..3 {
                overall_counts[i][k] += counts[k];
            }
            overall_change[i] |= change;
            points.push(point(*key, counts, change));
        }
        apps.push(AppTrend {
            app_id: app.to_string(),
            points,
        });
    }
    let overall = months
        .iter()
        .enumerate()
        .map(|(i, key)| point(*key, overall_counts[i], overall_change[i]))
        .collect();
    TrendReport {
        months: months.iter().map(|(y, m)| format!("{y:04}-{m:02}")).collect(),
        overall,
        apps,
    }
}
