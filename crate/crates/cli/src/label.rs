use std::collections::{BTreeMap, BTreeSet};

use revsent::client::{
    fetch_sentiment_all, read_jsonl, read_label_file, write_jsonl, BatchFailure, LabelReject,
    ModelLabelRecord, SentimentItem,
};
use revsent::corpus::{CleanReview, LanguageTag};
use revsent::labeling::{
    cohens_kappa, consensus_by_language, consensus_filter, join_model_labels, ConsensusCounts,
    KappaResult, LabeledReview, SentimentLabel,
};
use revsent::report::{fmt_f, Table};
use revsent::stats::stratified_split;
use revsent::{Error, Result};
use serde::Serialize;

use crate::run::{count_row, labels_table, RunContext};

/// Model labels for a set of reviews, from files or the sidecar.
pub struct Fetched {
    pub records: Vec<ModelLabelRecord>,
    pub rejects: Vec<LabelReject>,
    pub failures: Vec<BatchFailure>,
}

/// Every label-file record whose review is in `wanted`, or the sidecar's
/// answers for exactly those reviews. Either way the result only covers
/// `wanted`, so both transports feed identical data downstream.
pub fn fetch_labels(ctx: &RunContext, wanted: &[&CleanReview]) -> Result<Fetched> {
    if let Some(endpoint) = &ctx.config.endpoint {
        let items: Vec<SentimentItem> = wanted
            .iter()
            .map(|r| SentimentItem {
                id: r.id().to_string(),
                text: r.review.text.clone(),
            })
            .collect();
        let batched = fetch_sentiment_all(endpoint, &items)?;
        return Ok(Fetched {
            records: batched.records,
            rejects: Vec::new(),
            failures: batched.failures,
        });
    }
    let ids: BTreeSet<&str> = wanted.iter().map(|r| r.id()).collect();
    let mut out = Fetched {
        records: Vec::new(),
        rejects: Vec::new(),
        failures: Vec::new(),
    };
    for path in &ctx.config.labels_files {
        let file = read_label_file(path)?;
        out.rejects.extend(file.rejects);
        out.records
            .extend(file.records.into_iter().filter(|r| ids.contains(r.review_id.as_str())));
    }
    ctx.check_rejects("label records", out.rejects.len())?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SplitSummary {
    ratio: f64,
    seed: u64,
    train: [usize; 3],
    test: [usize; 3],
}

#[derive(Debug, Serialize)]
struct LabelingReport {
    corpus_size: usize,
    split: SplitSummary,
    model_id: Option<String>,
    label_rejects: Vec<LabelReject>,
    batch_failures: Vec<BatchFailure>,
    /// Training reviews without a model label; excluded from consensus.
    missing: Vec<String>,
    missing_share: f64,
    kappa: Option<KappaResult>,
    consensus: ConsensusCounts,
    consensus_by_language: BTreeMap<LanguageTag, ConsensusCounts>,
    warnings: Vec<String>,
}

fn class_counts(rows: &[LabeledReview]) -> [usize; 3] {
    let mut c = [0; 3];
    for r in rows {
        c[r.star_label.index()] += 1;
    }
    c
}

/// Keep one model's records: the configured one, or the only one present.
fn select_model(records: Vec<ModelLabelRecord>, wanted: Option<&str>) -> Result<(Option<String>, Vec<ModelLabelRecord>)> {
    let ids: BTreeSet<&str> = records.iter().map(|r| r.model_id.as_str()).collect();
    let chosen = match wanted {
        Some(m) => Some(m.to_string()),
        None if ids.len() <= 1 => ids.first().map(|s| s.to_string()),
        None => {
            return Err(Error::Validation(format!(
                "label sources carry several model ids ({}); pick one with --model-id",
                ids.into_iter().collect::<Vec<_>>().join(", ")
            )))
        }
    };
    let records = match &chosen {
        Some(m) => records.into_iter().filter(|r| &r.model_id == m).collect(),
        None => records,
    };
    Ok((chosen, records))
}

pub fn run(ctx: &RunContext, corpus: Option<std::path::PathBuf>) -> Result<()> {
    let corpus: Vec<CleanReview> = read_jsonl(&ctx.input(corpus, "corpus.jsonl"))?;
    if corpus.is_empty() {
        return Err(Error::Validation("corpus is empty".into()));
    }
    let all: Vec<LabeledReview> = corpus
        .iter()
        .cloned()
        .map(LabeledReview::star_only)
        .collect::<Result<_>>()?;
    let stars: Vec<SentimentLabel> = all.iter().map(|r| r.star_label).collect();
    let split = stratified_split(&stars, ctx.config.split_ratio, ctx.config.seed)?;
    let train_reviews: Vec<CleanReview> = split.train.iter().map(|&i| corpus[i].clone()).collect();
    let test: Vec<LabeledReview> = split.test.iter().map(|&i| all[i].clone()).collect();

    let fetched = fetch_labels(ctx, &train_reviews.iter().collect::<Vec<_>>())?;
    let (model_id, records) = select_model(fetched.records, ctx.config.consensus_model.as_deref())?;
    let joined = join_model_labels(&train_reviews, &records)?;
    let train = joined.labeled;
    let (labeled, _): (Vec<LabeledReview>, Vec<LabeledReview>) =
        train.iter().cloned().partition(|r| r.model_label.is_some());

    let mut warnings = Vec::new();
    let missing_share = joined.missing.len() as f64 / train.len().max(1) as f64;
    if missing_share > ctx.config.missing_label_warning {
        warnings.push(format!(
            "{:.1}% of training reviews have no model label (threshold {:.1}%)",
            missing_share * 100.0,
            ctx.config.missing_label_warning * 100.0
        ));
    }
    let kappa = if labeled.is_empty() {
        warnings.push("no model labels: kappa and consensus are empty".into());
        None
    } else {
        let star: Vec<SentimentLabel> = labeled.iter().map(|r| r.star_label).collect();
        let model: Vec<SentimentLabel> = labeled.iter().filter_map(|r| r.model_label).collect();
        Some(cohens_kappa(&star, &model)?)
    };
    let (kept, dropped) = consensus_filter(labeled)?;
    for w in &warnings {
        log::warn!("{w}");
    }

    write_jsonl(&ctx.path("train.jsonl"), &train)?;
    write_jsonl(&ctx.path("test.jsonl"), &test)?;
    write_jsonl(&ctx.path("consensus.jsonl"), &kept)?;

    let report = LabelingReport {
        corpus_size: corpus.len(),
        split: SplitSummary {
            ratio: ctx.config.split_ratio,
            seed: ctx.config.seed,
            train: class_counts(&train),
            test: class_counts(&test),
        },
        model_id,
        label_rejects: fetched.rejects,
        batch_failures: fetched.failures,
        missing: joined.missing,
        missing_share,
        kappa,
        consensus: ConsensusCounts {
            labeled: kept.len() + dropped.len(),
            kept: kept.len(),
            dropped: dropped.len(),
        },
        consensus_by_language: consensus_by_language(&kept, &dropped),
        warnings,
    };

    let mut sizes = labels_table("Split and consensus (star labels)");
    sizes.push(count_row("train", report.split.train));
    sizes.push(count_row("test", report.split.test));
    sizes.push(count_row("consensus", class_counts(&kept)));
    let mut agreement = Table::new("Agreement", &["language", "labeled", "kept", "dropped"]);
    for (lang, c) in &report.consensus_by_language {
        agreement.push(vec![
            lang.to_string(),
            c.labeled.to_string(),
            c.kept.to_string(),
            c.dropped.to_string(),
        ]);
    }
    let mut notes = Vec::new();
    if let Some(k) = &report.kappa {
        notes.push(format!(
            "kappa {} (observed {}, chance {}, n {})",
            fmt_f(k.kappa, 4),
            fmt_f(k.p_o, 4),
            fmt_f(k.p_e, 4),
            k.n
        ));
    }
    notes.push(format!(
        "{} training review(s) without a model label",
        report.missing.len()
    ));
    notes.extend(report.warnings.iter().cloned());
    ctx.write_report("labeling", &report)?;
    ctx.write_tables("labeling", &[sizes, agreement], &notes)?;
    log::info!(
        "label: {} train, {} test, {} consensus",
        train.len(),
        test.len(),
        kept.len()
    );
    Ok(())
}
