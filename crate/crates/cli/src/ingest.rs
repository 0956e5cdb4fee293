use std::collections::BTreeMap;

use revsent::client::write_jsonl;
use revsent::corpus::{build_corpus, read_reviews, AppStats, CorpusStats, DropStage};
use revsent::report::{fmt_opt, Table};
use revsent::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::run::RunContext;

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestReport {
    pub input_lines: usize,
    pub rejected: usize,
    pub drops: BTreeMap<DropStage, usize>,
    pub stats: CorpusStats,
}

fn stats_table(stats: &CorpusStats) -> Table {
    let mut t = Table::new(
        "Corpus",
        &["app", "raw", "deduped", "bilingual", "clean", "english", "bangla", "avg rating"],
    );
    let row = |s: &AppStats| {
        vec![
            s.app_id.clone(),
            s.raw_count.to_string(),
            s.deduped_count.to_string(),
            s.bilingual_count.to_string(),
            s.clean_count.to_string(),
            s.english_count.to_string(),
            s.bangla_count.to_string(),
            fmt_opt(s.avg_rating, 2),
        ]
    };
    for s in &stats.apps {
        t.push(row(s));
    }
    let mut total = row(&stats.totals);
    total[0] = "total".into();
    t.push(total);
    t
}

pub fn run(ctx: &RunContext) -> Result<()> {
    let input = ctx
        .config
        .input
        .clone()
        .ok_or_else(|| Error::Validation("ingest needs --input or an `input` config key".into()))?;
    let parsed = read_reviews(&input, &ctx.config.corpus.apps)?;
    write_jsonl(&ctx.path("rejects.jsonl"), &parsed.rejects)?;
    ctx.check_rejects("dump lines", parsed.rejects.len())?;

    let normalizer = ctx.config.corpus.normalizer()?;
    let build = build_corpus(&parsed.reviews, &ctx.config.corpus, &normalizer);
    write_jsonl(&ctx.path("corpus.jsonl"), &build.clean)?;
    write_jsonl(&ctx.path("drops.jsonl"), &build.drops)?;

    let mut drops: BTreeMap<DropStage, usize> = BTreeMap::new();
    for d in &build.drops {
        *drops.entry(d.stage).or_default() += 1;
    }
    let report = IngestReport {
        input_lines: parsed.reviews.len() + parsed.rejects.len(),
        rejected: parsed.rejects.len(),
        drops,
        stats: build.stats,
    };
    let mut funnel = Table::new("Dropped", &["stage", "reviews"]);
    funnel.push(vec!["rejected".into(), report.rejected.to_string()]);
    for (stage, n) in &report.drops {
        let name = serde_json::to_value(stage).expect("stage serializes");
        funnel.push(vec![name.as_str().unwrap_or_default().to_string(), n.to_string()]);
    }
    let stats = stats_table(&report.stats);
    ctx.write_report("stats", &report)?;
    ctx.write_tables("stats", &[stats, funnel], &[])?;
    log::info!(
        "ingest: {} lines, {} clean reviews",
        report.input_lines,
        build.clean.len()
    );
    if build.clean.is_empty() {
        return Err(Error::Validation("no valid reviews left after cleaning".into()));
    }
    Ok(())
}

/// Per-app corpus average rating from a stats report, if readable.
pub fn corpus_ratings(path: &std::path::Path) -> Result<BTreeMap<String, Option<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let report: IngestReport = serde_json::from_value(doc["report"].clone()).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(report
        .stats
        .apps
        .into_iter()
        .map(|s| (s.app_id, s.avg_rating))
        .collect())
}
