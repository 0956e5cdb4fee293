use std::collections::HashSet;
use std::path::PathBuf;

use revsent::analytics::{
    aggregate_absa, detect_aspect_cues, monthly_trends, profiles_by_app, rank_apps, AbsaReject,
    AbsaTable, Aspect, AspectLexicon, AspectPolarityRecord, TrendReport,
};
use revsent::client::{
    fetch_absa_all, read_absa_file, read_jsonl, AbsaItem, BatchFailure, LabelReject,
};
use revsent::labeling::LabeledReview;
use revsent::report::{fmt_f, fmt_opt, Table};
use revsent::{Error, Result};
use serde::Serialize;

use crate::ingest::corpus_ratings;
use crate::run::RunContext;

#[derive(Debug, Serialize)]
struct AspectReport {
    /// (review, aspect) pairs whose review text carries a lexicon cue.
    requested_pairs: usize,
    records: usize,
    missing_pairs: usize,
    rows: Vec<revsent::analytics::AspectProfile>,
    rejects: Vec<AbsaReject>,
    file_rejects: Vec<LabelReject>,
    batch_failures: Vec<BatchFailure>,
    notices: Vec<String>,
}

/// ABSA records for exactly the cued pairs, in request order.
fn absa_records(
    ctx: &RunContext,
    pairs: &[AbsaItem],
) -> Result<(Vec<AspectPolarityRecord>, Vec<LabelReject>, Vec<BatchFailure>)> {
    if let Some(endpoint) = &ctx.config.endpoint {
        let batched = fetch_absa_all(endpoint, pairs)?;
        return Ok((batched.records, Vec::new(), batched.failures));
    }
    let Some(path) = &ctx.config.absa_file else {
        return Ok((Vec::new(), Vec::new(), Vec::new()));
    };
    let file = read_absa_file(path)?;
    ctx.check_rejects("ABSA records", file.rejects.len())?;
    let wanted: HashSet<(&str, Aspect)> = pairs.iter().map(|p| (p.id.as_str(), p.aspect)).collect();
    let records = file
        .records
        .into_iter()
        .filter(|r| wanted.contains(&(r.review_id.as_str(), r.aspect)))
        .collect();
    Ok((records, file.rejects, Vec::new()))
}

fn aspects(ctx: &RunContext, reviews: &[LabeledReview]) -> Result<AspectReport> {
    let lexicon = match &ctx.config.aspects_dir {
        Some(dir) => AspectLexicon::from_dir(dir)?,
        None => AspectLexicon::default(),
    };
    let mut notices = Vec::new();
    let normalizer = ctx.config.corpus.normalizer()?;
    for (aspect, cue) in lexicon.unreachable_cues(&normalizer) {
        notices.push(format!("{aspect} cue {cue:?} cannot match normalized text"));
    }
    let pairs: Vec<AbsaItem> = reviews
        .iter()
        .flat_map(|r| {
            detect_aspect_cues(&r.review, &lexicon).into_iter().map(|aspect| AbsaItem {
                id: r.id().to_string(),
                text: r.review.review.text.clone(),
                aspect,
            })
        })
        .collect();
    let (records, file_rejects, batch_failures) = absa_records(ctx, &pairs)?;
    let covered: HashSet<(&str, Aspect)> = records.iter().map(|r| (r.review_id.as_str(), r.aspect)).collect();
    let missing_pairs = pairs
        .iter()
        .filter(|p| !covered.contains(&(p.id.as_str(), p.aspect)))
        .count();
    let AbsaTable { rows, rejects } = aggregate_absa(&records, reviews.iter().map(|r| &r.review));
    if rows.is_empty() {
        notices.push("no aspect records; aspect report omitted".into());
    }
    Ok(AspectReport {
        requested_pairs: pairs.len(),
        records: records.len(),
        missing_pairs,
        rows,
        rejects,
        file_rejects,
        batch_failures,
        notices,
    })
}

fn trend_table(trends: &TrendReport) -> Table {
    let mut t = Table::new(
        "Monthly sentiment",
        &["app", "month", "reviews", "negative %", "neutral %", "positive %", "new version"],
    );
    let rows = std::iter::once(("all", &trends.overall))
        .chain(trends.apps.iter().map(|a| (a.app_id.as_str(), &a.points)));
    for (app, points) in rows {
        for p in points.iter() {
            t.push(vec![
                app.to_string(),
                p.month.clone(),
                p.total.to_string(),
                fmt_f(p.negative_share * 100.0, 1),
                fmt_f(p.neutral_share * 100.0, 1),
                fmt_f(p.positive_share * 100.0, 1),
                if p.version_change { "yes" } else { "" }.to_string(),
            ]);
        }
    }
    t
}

pub fn run(ctx: &RunContext, consensus: Option<PathBuf>, stats: Option<PathBuf>) -> Result<()> {
    let reviews: Vec<LabeledReview> = read_jsonl(&ctx.input(consensus, "consensus.jsonl"))?;
    if reviews.is_empty() {
        return Err(Error::Validation("consensus set is empty".into()));
    }

    let stats_path = stats.clone().unwrap_or_else(|| ctx.path("stats.json"));
    let ratings = if stats.is_some() || stats_path.exists() {
        Some(corpus_ratings(&stats_path)?)
    } else {
        None
    };
    let mut profiles = profiles_by_app(&reviews)?;
    if let Some(ratings) = &ratings {
        for p in &mut profiles {
            p.corpus_avg_rating = ratings.get(&p.app_id).copied().flatten();
        }
    }
    let ranking = rank_apps(profiles);
    let mut t = Table::new(
        "App ranking (thumbs-up weighted)",
        &["rank", "app", "reviews", "weight", "PSS %", "NSS %", "neutral %", "avg rating", "corpus rating"],
    );
    for (i, p) in ranking.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            p.app_id.clone(),
            p.n_reviews.to_string(),
            p.total_weight.to_string(),
            fmt_opt(p.pss, 2),
            fmt_opt(p.nss, 2),
            fmt_opt(p.neutral_share, 2),
            fmt_f(p.avg_rating, 2),
            fmt_opt(p.corpus_avg_rating, 2),
        ]);
    }
    let notes: Vec<String> = ranking
        .iter()
        .filter(|p| p.degenerate)
        .map(|p| format!("{} has no thumbs-up weight; scores undefined", p.app_id))
        .collect();
    ctx.write_report("ranking", &ranking)?;
    ctx.write_tables("ranking", std::slice::from_ref(&t), &notes)?;
    ctx.write_csv("ranking", &t)?;

    let report = aspects(ctx, &reviews)?;
    let mut t = Table::new(
        "Aspects",
        &["app", "aspect", "mentions", "negative %", "neutral %", "positive %", "salience", "share %"],
    );
    for r in &report.rows {
        t.push(vec![
            r.app_id.clone(),
            r.aspect.to_string(),
            r.mentions.to_string(),
            fmt_f(r.negative_share, 1),
            fmt_f(r.neutral_share, 1),
            fmt_f(r.positive_share, 1),
            r.salience.to_string(),
            fmt_f(r.mention_share, 1),
        ]);
    }
    let mut notes = report.notices.clone();
    if report.missing_pairs > 0 {
        notes.push(format!(
            "{} of {} cued pairs have no ABSA record",
            report.missing_pairs, report.requested_pairs
        ));
    }
    ctx.write_report("aspects", &report)?;
    if report.rows.is_empty() {
        ctx.write_tables("aspects", &[], &notes)?;
        let _ = std::fs::remove_file(ctx.path("aspects.csv"));
    } else {
        ctx.write_tables("aspects", std::slice::from_ref(&t), &notes)?;
        ctx.write_csv("aspects", &t)?;
    }

    let trends = monthly_trends(&reviews);
    let t = trend_table(&trends);
    ctx.write_report("trends", &trends)?;
    ctx.write_tables("trends", std::slice::from_ref(&t), &[])?;
    ctx.write_csv("trends", &t)?;
    log::info!(
        "analyze: {} apps, {} aspect rows, {} months",
        ranking.len(),
        report.rows.len(),
        trends.months.len()
    );
    Ok(())
}
