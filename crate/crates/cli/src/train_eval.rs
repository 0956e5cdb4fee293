use std::collections::BTreeMap;
use std::path::PathBuf;

use revsent::client::{read_jsonl, write_jsonl, BatchFailure, LabelReject};
use revsent::corpus::{CleanReview, LanguageTag};
use revsent::features::{fit_vocabulary, tokenize, SparseVector};
use revsent::labeling::{LabeledReview, SentimentLabel};
use revsent::models::{self, grid_search, GridSearchResult, ModelFamily, Params};
use revsent::report::{fmt_f, fmt_p, write_json, Table};
use revsent::stats::{
    bootstrap_ci, classification_metrics, language_stratified_eval, mcnemar, BootstrapCi,
    ConfusionMatrix, LanguageEval, McNemarResult, MetricSelector, Metrics,
};
use revsent::{Error, Result};
use serde::Serialize;

use crate::label::fetch_labels;
use crate::run::RunContext;

/// One row of predictions over the test set; `None` where an external
/// model gave no label.
struct Predicted {
    id: String,
    display: String,
    params: Option<Params>,
    labels: Vec<Option<SentimentLabel>>,
}

#[derive(Debug, Serialize)]
struct ModelEval {
    model_id: String,
    display_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<Params>,
    /// Test items this model labeled.
    covered: usize,
    confusion: ConfusionMatrix,
    metrics: Metrics,
    intervals: Vec<BootstrapCi>,
    languages: LanguageEval,
}

#[derive(Debug, Serialize)]
struct PairTest {
    a: String,
    b: String,
    /// Items both models labeled.
    n: usize,
    result: McNemarResult,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    train_size: usize,
    test_size: usize,
    vocabulary_size: usize,
    models: Vec<ModelEval>,
    mcnemar: Vec<PairTest>,
    external_rejects: Vec<LabelReject>,
    batch_failures: Vec<BatchFailure>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct GridReport {
    families: Vec<FamilyGrid>,
}

#[derive(Debug, Serialize)]
struct FamilyGrid {
    family: ModelFamily,
    search: GridSearchResult,
}

#[derive(Debug, Serialize)]
struct PredictionRow<'a> {
    review_id: &'a str,
    language: LanguageTag,
    star_label: SentimentLabel,
    predictions: BTreeMap<&'a str, Option<SentimentLabel>>,
}

const INTERVALS: [MetricSelector; 3] = [
    MetricSelector::Accuracy,
    MetricSelector::WeightedF1,
    MetricSelector::MacroF1,
];

fn features(vocab: &revsent::features::Vocabulary, rows: &[LabeledReview]) -> Vec<SparseVector> {
    rows.iter()
        .map(|r| vocab.transform(&tokenize(&r.review.normalized_text)))
        .collect()
}

fn evaluate(ctx: &RunContext, test: &[LabeledReview], p: &Predicted) -> Result<ModelEval> {
    let (mut langs, mut truth, mut pred) = (Vec::new(), Vec::new(), Vec::new());
    for (r, label) in test.iter().zip(&p.labels) {
        if let Some(label) = label {
            langs.push(r.language());
            truth.push(r.star_label);
            pred.push(*label);
        }
    }
    if truth.is_empty() {
        return Err(Error::Validation(format!("model {} labeled no test items", p.id)));
    }
    let c = &ctx.config;
    let (confusion, metrics) = classification_metrics(&truth, &pred)?;
    let intervals = INTERVALS
        .iter()
        .map(|m| bootstrap_ci(&truth, &pred, *m, c.bootstrap_resamples, c.confidence_level, c.seed))
        .collect::<Result<_>>()?;
    let languages = language_stratified_eval(&langs, &truth, &pred, c.bootstrap_resamples, c.confidence_level, c.seed)?;
    Ok(ModelEval {
        model_id: p.id.clone(),
        display_name: p.display.clone(),
        params: p.params.clone(),
        covered: truth.len(),
        confusion,
        metrics,
        intervals,
        languages,
    })
}

fn pair_test(test: &[LabeledReview], a: &Predicted, b: &Predicted) -> Result<PairTest> {
    let (mut truth, mut pa, mut pb) = (Vec::new(), Vec::new(), Vec::new());
    for ((r, la), lb) in test.iter().zip(&a.labels).zip(&b.labels) {
        if let (Some(la), Some(lb)) = (la, lb) {
            truth.push(r.star_label);
            pa.push(*la);
            pb.push(*lb);
        }
    }
    Ok(PairTest {
        a: a.id.clone(),
        b: b.id.clone(),
        n: truth.len(),
        result: mcnemar(&truth, &pa, &pb)?,
    })
}

/// External model predictions over the test set, one entry per model_id.
fn external(ctx: &RunContext, test: &[LabeledReview], warnings: &mut Vec<String>) -> Result<(Vec<Predicted>, Vec<LabelReject>, Vec<BatchFailure>)> {
    if ctx.config.endpoint.is_none() && ctx.config.labels_files.is_empty() {
        return Ok((Vec::new(), Vec::new(), Vec::new()));
    }
    let reviews: Vec<&CleanReview> = test.iter().map(|r| &r.review).collect();
    let fetched = fetch_labels(ctx, &reviews)?;
    let position: BTreeMap<&str, usize> = test.iter().enumerate().map(|(i, r)| (r.id(), i)).collect();
    let mut by_model: BTreeMap<String, Vec<Option<SentimentLabel>>> = BTreeMap::new();
    for rec in &fetched.records {
        let labels = by_model
            .entry(rec.model_id.clone())
            .or_insert_with(|| vec![None; test.len()]);
        let slot = &mut labels[position[rec.review_id.as_str()]];
        if slot.is_some() {
            warnings.push(format!(
                "model {} labeled {} twice; first label kept",
                rec.model_id, rec.review_id
            ));
        } else {
            *slot = Some(rec.label);
        }
    }
    let mut out = Vec::new();
    for (id, labels) in by_model {
        if ModelFamily::ALL.iter().any(|f| f.id() == id) {
            return Err(Error::Validation(format!("external model id {id:?} clashes with a built-in model")));
        }
        let covered = labels.iter().flatten().count();
        if covered < test.len() {
            warnings.push(format!(
                "model {id} labeled {covered} of {} test items; its metrics cover those only",
                test.len()
            ));
        }
        out.push(Predicted {
            display: id.clone(),
            id,
            params: None,
            labels,
        });
    }
    Ok((out, fetched.rejects, fetched.failures))
}

pub fn run(ctx: &RunContext, train: Option<PathBuf>, test: Option<PathBuf>) -> Result<()> {
    let train: Vec<LabeledReview> = read_jsonl(&ctx.input(train, "consensus.jsonl"))?;
    let test: Vec<LabeledReview> = read_jsonl(&ctx.input(test, "test.jsonl"))?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Validation(format!(
            "need non-empty train and test sets, got {} and {}",
            train.len(),
            test.len()
        )));
    }
    let c = &ctx.config;
    let docs: Vec<Vec<String>> = train.iter().map(|r| tokenize(&r.review.normalized_text)).collect();
    let vocab = fit_vocabulary(&docs, &c.features)?;
    let file = std::fs::File::create(ctx.path("vocabulary.txt")).map_err(|e| Error::Io {
        path: ctx.path("vocabulary.txt"),
        source: e,
    })?;
    vocab.write_to(std::io::BufWriter::new(file))?;
    let xs: Vec<SparseVector> = docs.iter().map(|d| vocab.transform(d)).collect();
    let ys: Vec<SentimentLabel> = train.iter().map(|r| r.star_label).collect();
    let test_xs = features(&vocab, &test);

    let models_dir = ctx.path("models");
    std::fs::create_dir_all(&models_dir).map_err(|e| Error::Io {
        path: models_dir.clone(),
        source: e,
    })?;
    let mut predicted = Vec::new();
    let mut grids = Vec::new();
    for family in ModelFamily::ALL {
        let candidates = c.grids.candidates(family);
        let search = grid_search(&candidates, &xs, &ys, c.cv_folds, c.seed)?;
        let best = search.best().params.clone();
        let seed = models::candidate_seed(c.seed, search.winner, c.cv_folds);
        let model = models::train(&best, &xs, &ys, seed)?;
        write_json(&models_dir.join(format!("{}.json", family.id())), &model)?;
        let preds = models::predict(&model, &test_xs)?;
        log::info!(
            "{}: cv macro-F1 {:.4}, {} candidate(s)",
            family.display_name(),
            search.best().mean_macro_f1,
            candidates.len()
        );
        predicted.push(Predicted {
            id: family.id().to_string(),
            display: family.display_name().to_string(),
            params: Some(best),
            labels: preds.labels.into_iter().map(Some).collect(),
        });
        grids.push(FamilyGrid { family, search });
    }
    let mut warnings = Vec::new();
    let (ext, external_rejects, batch_failures) = external(ctx, &test, &mut warnings)?;
    predicted.extend(ext);

    let models = predicted
        .iter()
        .map(|p| evaluate(ctx, &test, p))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..predicted.len() {
        for j in i + 1..predicted.len() {
            pairs.push(pair_test(&test, &predicted[i], &predicted[j])?);
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let rows: Vec<PredictionRow> = test
        .iter()
        .enumerate()
        .map(|(i, r)| PredictionRow {
            review_id: r.id(),
            language: r.language(),
            star_label: r.star_label,
            predictions: predicted.iter().map(|p| (p.id.as_str(), p.labels[i])).collect(),
        })
        .collect();
    write_jsonl(&ctx.path("predictions.jsonl"), &rows)?;
    ctx.write_report("grid", &GridReport { families: grids })?;

    let report = EvaluationReport {
        train_size: train.len(),
        test_size: test.len(),
        vocabulary_size: vocab.len(),
        models,
        mcnemar: pairs,
        external_rejects,
        batch_failures,
        warnings,
    };
    let tables = tables(&report);
    ctx.write_report("evaluation", &report)?;
    ctx.write_tables("evaluation", &tables, &report.warnings)?;
    Ok(())
}

fn ci(m: &ModelEval, which: MetricSelector) -> String {
    m.intervals
        .iter()
        .find(|i| i.metric == which)
        .map(|i| format!("[{}, {}]", fmt_f(i.lower, 3), fmt_f(i.upper, 3)))
        .unwrap_or_default()
}

fn tables(report: &EvaluationReport) -> Vec<Table> {
    let mut perf = Table::new(
        "Held-out performance",
        &["model", "n", "accuracy", "CI", "precision", "recall", "F1", "CI", "macro F1"],
    );
    for m in &report.models {
        perf.push(vec![
            m.display_name.clone(),
            m.covered.to_string(),
            fmt_f(m.metrics.accuracy, 4),
            ci(m, MetricSelector::Accuracy),
            fmt_f(m.metrics.weighted_precision, 4),
            fmt_f(m.metrics.weighted_recall, 4),
            fmt_f(m.metrics.weighted_f1, 4),
            ci(m, MetricSelector::WeightedF1),
            fmt_f(m.metrics.macro_f1, 4),
        ]);
    }
    let mut langs = Table::new(
        "By language",
        &["model", "language", "n", "accuracy", "F1", "F1 CI"],
    );
    for m in &report.models {
        for row in &m.languages.rows {
            langs.push(vec![
                m.display_name.clone(),
                row.language.to_string(),
                row.n.to_string(),
                fmt_f(row.metrics.accuracy, 4),
                fmt_f(row.metrics.weighted_f1, 4),
                format!(
                    "[{}, {}]",
                    fmt_f(row.weighted_f1_ci.lower, 3),
                    fmt_f(row.weighted_f1_ci.upper, 3)
                ),
            ]);
        }
    }
    let mut paired = Table::new(
        "McNemar (continuity corrected)",
        &["pair", "n", "b", "c", "chi2", "p", "significant"],
    );
    for p in &report.mcnemar {
        paired.push(vec![
            format!("{} vs {}", p.a, p.b),
            p.n.to_string(),
            p.result.b.to_string(),
            p.result.c.to_string(),
            fmt_f(p.result.chi2, 3),
            fmt_p(p.result.p_value),
            if p.result.significant { "yes" } else { "no" }.to_string(),
        ]);
    }
    vec![perf, langs, paired]
}
