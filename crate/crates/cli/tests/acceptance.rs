//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chrono::TimeZone;
use common::{code, differing, snapshot, stderr, without_config_echo, Workspace};
use rand::Rng;
use revsent::analytics::weighted_scores;
use revsent::corpus::{build_corpus, parse_reviews, CleanReview, CorpusConfig, DropStage, LanguageTag, RawReview};
use revsent::features::{fit_vocabulary, tokenize, FeatureConfig, SparseVector};
use revsent::labeling::{cohens_kappa, kappa_from_matrix, LabeledReview, SentimentLabel};
use revsent::models::{self, Classifier, LogRegObjective, LrConfig, Params, RfConfig, SvmConfig};
use revsent::seed::rng;
use revsent::stats::{
    bootstrap_ci, chi2_sf_1df, classification_metrics, mcnemar_from_counts, stratified_split,
    MetricSelector,
};
use revsent_testkit::{funnel_dump, planted_corpus, StubServer};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn funnel() -> Outcome {
    let dump = funnel_dump();
    let start = Instant::now();
    let parsed = parse_reviews(dump.jsonl.as_bytes(), &[]).map_err(|e| e.to_string())?;
    let config = CorpusConfig::default();
    let normalizer = config.normalizer().map_err(|e| e.to_string())?;
    let build = build_corpus(&parsed.reviews, &config, &normalizer);
    let elapsed = start.elapsed();

    let count = |stage| build.drops.iter().filter(|d| d.stage == stage).count();
    let got = [
        count(DropStage::Duplicate),
        count(DropStage::Noisy),
        count(DropStage::Language),
        count(DropStage::Empty),
        build.clean.len(),
    ];
    let want = [dump.duplicates, dump.noisy, dump.language, dump.empty, dump.kept];
    let mut seen: BTreeSet<&str> = build.clean.iter().map(|r| r.id()).collect();
    let each_once = build.drops.iter().all(|d| seen.insert(&d.review_id)) && seen.len() == dump.raw;
    let reconciles = parsed.rejects.is_empty()
        && build.clean.len() + build.drops.len() == dump.raw
        && build.stats.totals.raw_count == dump.raw;
    check(
        got == want && each_once && reconciles && elapsed < Duration::from_secs(1),
        format!(
            "{} rows -> dup/noise/lang/empty/kept {got:?} (want {want:?}), {:.1} ms",
            dump.raw,
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn kappa() -> Outcome {
    // Exact values worked out with rational arithmetic.
    let cases: [([[u64; 3]; 3], f64); 10] = [
        ([[10, 0, 0], [0, 10, 0], [0, 0, 10]], 1.0),
        ([[4, 4, 2], [4, 4, 2], [2, 2, 1]], 0.0),
        ([[0, 5, 5], [5, 0, 5], [5, 5, 0]], -0.5),
        ([[20, 5, 0], [3, 15, 2], [1, 4, 30]], 5.0 / 7.0),
        ([[50, 10, 5], [8, 30, 7], [2, 5, 40]], 283.0 / 440.0),
        ([[1, 2, 3], [4, 5, 6], [7, 8, 9]], -1.0 / 24.0),
        ([[0, 10, 0], [0, 0, 10], [10, 0, 0]], -0.5),
        ([[30, 0, 0], [0, 0, 0], [0, 0, 10]], 1.0),
        ([[25, 5, 1], [6, 9, 3], [2, 4, 12]], 1447.0 / 2854.0),
        ([[3, 1, 0], [1, 0, 2], [0, 3, 1]], 4.0 / 81.0),
    ];
    let mut worst = 0.0f64;
    for (matrix, want) in cases {
        let k = kappa_from_matrix(matrix).map_err(|e| e.to_string())?.kappa;
        // The label-sequence entry point must agree with the matrix one.
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, row) in matrix.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    a.push(SentimentLabel::from_index(i).unwrap());
                    b.push(SentimentLabel::from_index(j).unwrap());
                }
            }
        }
        let k2 = cohens_kappa(&a, &b).map_err(|e| e.to_string())?.kappa;
        worst = worst.max((k - want).abs()).max((k2 - want).abs());
    }
    check(worst <= 1e-9, format!("10 matrices, max |error| {worst:.2e}"))
}

fn random_corpus(r: &mut revsent::seed::Rng) -> Vec<Vec<String>> {
    let n_terms = r.gen_range(2..=50);
    let n_docs = r.gen_range(1..=20);
    (0..n_docs)
        .map(|_| {
            (0..r.gen_range(0..=12))
                .map(|_| format!("t{}", r.gen_range(0..n_terms)))
                .collect()
        })
        .collect()
}

fn grams(doc: &[String], max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for start in 0..doc.len().saturating_sub(n - 1) {
            out.push(doc[start..start + n].join(" "));
        }
    }
    out
}

/// Direct TF-IDF: dense per-term loops, nothing shared with the library.
fn brute_tfidf(train: &[Vec<String>], doc: &[String], max_n: usize) -> BTreeMap<String, f64> {
    let n = train.len() as f64;
    let terms: BTreeSet<String> = train.iter().flat_map(|d| grams(d, max_n)).collect();
    let doc_grams = grams(doc, max_n);
    let mut weights = BTreeMap::new();
    for t in &terms {
        let tf = doc_grams.iter().filter(|g| *g == t).count();
        if tf == 0 {
            continue;
        }
        let df = train.iter().filter(|d| grams(d, max_n).contains(t)).count() as f64;
        let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
        weights.insert(t.clone(), (1.0 + (tf as f64).ln()) * idf);
    }
    let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for w in weights.values_mut() {
            *w /= norm;
        }
    }
    weights
}

fn tfidf() -> Outcome {
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    let mut corpora = 0;
    while corpora < 20 {
        let train = random_corpus(&mut r);
        if train.iter().all(Vec::is_empty) {
            continue;
        }
        corpora += 1;
        let max_n = if corpora % 2 == 0 { 2 } else { 1 };
        let config = FeatureConfig {
            ngram_min: 1,
            ngram_max: max_n,
            max_features: None,
        };
        let vocab = fit_vocabulary(&train, &config).map_err(|e| e.to_string())?;
        let distinct: BTreeSet<String> = train.iter().flat_map(|d| grams(d, max_n)).collect();
        if vocab.len() != distinct.len() {
            return Err(format!("vocabulary size {} vs {}", vocab.len(), distinct.len()));
        }
        let mut docs = train.clone();
        docs.extend(random_corpus(&mut r).into_iter().take(3));
        for doc in &docs {
            let x = vocab.transform(doc);
            let want = brute_tfidf(&train, doc, max_n);
            let mut dense = vec![0.0; vocab.len()];
            for (term, w) in &want {
                dense[vocab.index_of(term).ok_or(format!("term {term} missing"))?] = *w;
            }
            for (j, w) in dense.iter().enumerate() {
                worst = worst.max((x.get(j) - w).abs());
            }
        }
    }
    check(worst <= 1e-9, format!("20 corpora, max component error {worst:.2e}"))
}

fn naive_bayes() -> Outcome {
    let mut r = rng(77);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let dim = r.gen_range(2..=6);
        let n = r.gen_range(2..=10);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| f64::from(r.gen_range(0..4u8))).collect())
            .collect();
        let mut ys: Vec<SentimentLabel> = (0..n)
            .map(|_| SentimentLabel::from_index(r.gen_range(0..3)).unwrap())
            .collect();
        ys[0] = SentimentLabel::Negative;
        ys[1] = SentimentLabel::Positive;
        let alpha = [0.5, 1.0, 2.0][r.gen_range(0..3)];
        let sparse: Vec<SparseVector> = xs.iter().map(|x| SparseVector::from_dense(x)).collect();
        let model = models::train_nb(&sparse, &ys, alpha).map_err(|e| e.to_string())?;

        // Bayes' rule with plain products over the counts.
        let mut theta = vec![vec![0.0; dim]; 3];
        let mut prior = [0.0; 3];
        for k in 0..3 {
            let rows: Vec<&Vec<f64>> = xs.iter().zip(&ys).filter(|(_, y)| y.index() == k).map(|(x, _)| x).collect();
            prior[k] = rows.len() as f64 / n as f64;
            let total: f64 = rows.iter().map(|x| x.iter().sum::<f64>()).sum();
            for j in 0..dim {
                let mass: f64 = rows.iter().map(|x| x[j]).sum();
                theta[k][j] = (mass + alpha) / (total + alpha * dim as f64);
            }
        }
        for (x, sx) in xs.iter().zip(&sparse) {
            let joint: Vec<f64> = (0..3)
                .map(|k| prior[k] * (0..dim).map(|j| theta[k][j].powf(x[j])).product::<f64>())
                .collect();
            let evidence: f64 = joint.iter().sum();
            let got = model.scores(sx);
            for k in 0..3 {
                let want = (joint[k] / evidence).ln();
                if want == f64::NEG_INFINITY {
                    if got[k] != f64::NEG_INFINITY {
                        return Err(format!("class {k} should be impossible"));
                    }
                } else {
                    worst = worst.max((got[k] - want).abs());
                }
            }
        }
    }
    check(worst <= 1e-9, format!("25 corpora of <= 10 docs, max log-posterior error {worst:.2e}"))
}

fn lr_gradient() -> Outcome {
    let mut r = rng(5);
    let dim = 40;
    let xs: Vec<SparseVector> = (0..30)
        .map(|_| {
            let dense: Vec<f64> = (0..dim)
                .map(|_| if r.gen_bool(0.3) { r.gen_range(0.0..1.0) } else { 0.0 })
                .collect();
            SparseVector::from_dense(&dense).normalized()
        })
        .collect();
    let ys: Vec<SentimentLabel> = (0..30).map(|i| SentimentLabel::from_index(i % 3).unwrap()).collect();
    let obj = LogRegObjective::new(&xs, &ys, 1e-2).map_err(|e| e.to_string())?;
    let params: Vec<f64> = (0..obj.n_params()).map(|_| r.gen_range(-0.5..0.5)).collect();
    let grad = obj.gradient(&params);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..obj.n_params() {
        let mut plus = params.clone();
        let mut minus = params.clone();
        plus[i] += h;
        minus[i] -= h;
        let numeric = (obj.value(&plus) - obj.value(&minus)) / (2.0 * h);
        let scale = grad[i].abs().max(numeric.abs());
        if scale > 0.0 {
            worst = worst.max((grad[i] - numeric).abs() / scale);
        }
    }
    check(
        obj.n_params() >= 100 && worst < 1e-4,
        format!("{} coordinates, max relative error {worst:.2e}", obj.n_params()),
    )
}

fn separable_training() -> Outcome {
    let start = Instant::now();
    let planted = planted_corpus(7);
    let parsed = parse_reviews(planted.dump_jsonl().as_bytes(), &[]).map_err(|e| e.to_string())?;
    let config = CorpusConfig::default();
    let corpus = build_corpus(&parsed.reviews, &config, &config.normalizer().map_err(|e| e.to_string())?).clean;
    let stars: Vec<SentimentLabel> = corpus
        .iter()
        .map(|c| revsent::labeling::star_to_sentiment(c.review.rating).unwrap())
        .collect();
    let split = stratified_split(&stars, 0.2, 42).map_err(|e| e.to_string())?;
    let docs: Vec<Vec<String>> = corpus.iter().map(|c| tokenize(&c.normalized_text)).collect();
    let train_docs: Vec<Vec<String>> = split.train.iter().map(|&i| docs[i].clone()).collect();
    let vocab = fit_vocabulary(&train_docs, &FeatureConfig::default()).map_err(|e| e.to_string())?;
    let xs: Vec<SparseVector> = train_docs.iter().map(|d| vocab.transform(d)).collect();
    let ys: Vec<SentimentLabel> = split.train.iter().map(|&i| stars[i]).collect();
    let test_xs: Vec<SparseVector> = split.test.iter().map(|&i| vocab.transform(&docs[i])).collect();
    let test_ys: Vec<SentimentLabel> = split.test.iter().map(|&i| stars[i]).collect();

    let params = [
        Params::NaiveBayes { alpha: 1.0 },
        Params::LogisticRegression(LrConfig::default()),
        Params::LinearSvm(SvmConfig::default()),
        Params::RandomForest(RfConfig::default()),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for p in &params {
        let model = models::train(p, &xs, &ys, 42).map_err(|e| e.to_string())?;
        let pred = models::predict(&model, &test_xs).map_err(|e| e.to_string())?;
        let (_, m) = classification_metrics(&test_ys, &pred.labels).map_err(|e| e.to_string())?;
        ok &= m.accuracy >= 0.90;
        parts.push(format!("{} {:.3}", p.family().id(), m.accuracy));
    }
    let elapsed = start.elapsed();
    check(
        ok && elapsed < Duration::from_secs(120) && corpus.len() == 1000,
        format!("{} ({} test reviews), {:.1} s", parts.join(", "), test_ys.len(), elapsed.as_secs_f64()),
    )
}

fn mcnemar() -> Outcome {
    let m = mcnemar_from_counts(10, 2);
    let tail = chi2_sf_1df(3.841).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..1000).map(|i| f64::from(i) * 0.03).collect();
    let values: Vec<f64> = grid.iter().map(|&x| chi2_sf_1df(x).unwrap()).collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0])
        && values.iter().all(|v| (0.0..=1.0).contains(v))
        && values[0] == 1.0;
    check(
        (m.chi2 - 49.0 / 12.0).abs() <= 1e-9
            && (m.p_value - 0.0433).abs() <= 5e-4
            && (tail - 0.05).abs() <= 5e-4
            && monotone,
        format!(
            "chi2 {:.12}, p {:.5}, sf(3.841) {:.5}, 1000-point grid non-increasing: {monotone}",
            m.chi2, m.p_value, tail
        ),
    )
}

fn bootstrap() -> Outcome {
    // Every fifth prediction is wrong: accuracy exactly 0.8.
    let fixture = |n: usize| {
        let truth: Vec<SentimentLabel> = (0..n).map(|i| SentimentLabel::from_index(i % 3).unwrap()).collect();
        let pred: Vec<SentimentLabel> = truth
            .iter()
            .enumerate()
            .map(|(i, t)| if i % 5 == 4 { SentimentLabel::from_index((t.index() + 1) % 3).unwrap() } else { *t })
            .collect();
        (truth, pred)
    };
    let ci = |n| {
        let (t, p) = fixture(n);
        bootstrap_ci(&t, &p, MetricSelector::Accuracy, 2000, 0.95, 11).unwrap()
    };
    let small = ci(250);
    let large = ci(1000);
    let again = ci(250);
    let ratio = (small.upper - small.lower) / (large.upper - large.lower);
    let brackets = [&small, &large].iter().all(|c| c.lower <= c.point && c.point <= c.upper);
    let bitwise = small.lower.to_bits() == again.lower.to_bits() && small.upper.to_bits() == again.upper.to_bits();
    check(
        brackets && (1.6..=2.6).contains(&ratio) && bitwise && (small.point - 0.8).abs() < 1e-12,
        format!(
            "n=250 [{:.4}, {:.4}], n=1000 [{:.4}, {:.4}], shrink {ratio:.3}, repeat bitwise equal: {bitwise}",
            small.lower, small.upper, large.lower, large.upper
        ),
    )
}

fn review(id: &str, app: &str, label: SentimentLabel, thumbs: u64) -> LabeledReview {
    let rating = match label {
        SentimentLabel::Negative => 1,
        SentimentLabel::Neutral => 3,
        SentimentLabel::Positive => 5,
    };
    LabeledReview::star_only(CleanReview {
        review: RawReview {
            review_id: id.into(),
            app_id: app.into(),
            text: "text".into(),
            rating,
            posted_at: chrono::Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap(),
            thumbs_up: thumbs,
            app_version: None,
        },
        language: LanguageTag::English,
        normalized_text: "text".into(),
    })
    .unwrap()
}

fn weighted() -> Outcome {
    use SentimentLabel::*;
    let base = vec![
        review("a", "x", Positive, 12),
        review("b", "x", Positive, 3),
        review("c", "x", Negative, 5),
        review("d", "x", Neutral, 10),
    ];
    // (12 + 3) / 30 and 5 / 30, in percent.
    let p = weighted_scores(&base).map_err(|e| e.to_string())?;
    let hand = p.pss == Some(50.0)
        && (p.nss.unwrap() - 50.0 / 3.0).abs() < 1e-12
        && (p.neutral_share.unwrap() - 100.0 / 3.0).abs() < 1e-12
        && p.total_weight == 30;
    let second = weighted_scores(&[review("e", "y", Negative, 7), review("f", "y", Positive, 1)])
        .map_err(|e| e.to_string())?;
    let hand2 = second.pss == Some(12.5) && second.nss == Some(87.5);

    let mut padded = base.clone();
    padded.push(review("z1", "x", Negative, 0));
    padded.push(review("z2", "x", Neutral, 0));
    let q = weighted_scores(&padded).map_err(|e| e.to_string())?;
    let invariant = q.pss == p.pss && q.nss == p.nss;

    let zero = weighted_scores(&[review("g", "w", Positive, 0), review("h", "w", Negative, 0)])
        .map_err(|e| e.to_string())?;
    let nulls = zero.pss.is_none() && zero.nss.is_none() && zero.degenerate;
    check(
        hand && hand2 && invariant && nulls,
        format!(
            "PSS/NSS {:?}/{:.4} and {:?}/{:?}; zero-thumb invariance {invariant}; zero-weight app nulls {nulls}",
            p.pss,
            p.nss.unwrap_or(f64::NAN),
            second.pss,
            second.nss
        ),
    )
}

fn planted_workspace() -> Workspace {
    let ws = Workspace::new();
    let p = planted_corpus(7);
    ws.write("dump.jsonl", &p.dump_jsonl());
    ws.write("labels.jsonl", &p.sentiment_jsonl());
    ws.write("absa.jsonl", &p.absa_jsonl());
    ws
}

fn determinism() -> Outcome {
    let ws = planted_workspace();
    for run in ["first", "second"] {
        let out = ws.revsent(&[
            "--run-name", run, "run", "--input", "dump.jsonl", "--labels-file", "labels.jsonl", "--absa-file", "absa.jsonl",
        ]);
        if code(&out) != 0 {
            return Err(format!("run {run} exited {}: {}", code(&out), stderr(&out)));
        }
    }
    let a = snapshot(&ws.run_dir("first"));
    let b = snapshot(&ws.run_dir("second"));
    let diff = differing(&a, &b);
    check(
        diff.is_empty() && a.len() >= 20,
        format!("{} files compared, differing: {diff:?}", a.len()),
    )
}

fn transparency() -> Outcome {
    let ws = planted_workspace();
    let p = planted_corpus(7);
    let stub = StubServer::start(&p.sentiment, &p.absa, &["xlmr-ots", "absa-v1"]);
    let file_run = ws.revsent(&[
        "--run-name", "files", "run", "--input", "dump.jsonl", "--labels-file", "labels.jsonl", "--absa-file", "absa.jsonl",
    ]);
    let http_run = ws.revsent(&["--run-name", "http", "run", "--input", "dump.jsonl", "--endpoint", stub.url()]);
    for (name, out) in [("file", &file_run), ("endpoint", &http_run)] {
        if code(out) != 0 {
            return Err(format!("{name} run exited {}: {}", code(out), stderr(out)));
        }
    }
    let a = without_config_echo(snapshot(&ws.run_dir("files")));
    let b = without_config_echo(snapshot(&ws.run_dir("http")));
    let diff = differing(&a, &b);
    check(
        diff.is_empty() && stub.post_count() > 0,
        format!(
            "{} files compared after removing the config echo, {} sidecar requests, differing: {diff:?}",
            a.len(),
            stub.post_count()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("funnel exactness", funnel),
        ("kappa oracle", kappa),
        ("tf-idf oracle", tfidf),
        ("naive Bayes oracle", naive_bayes),
        ("logistic regression gradient check", lr_gradient),
        ("separable-fixture training", separable_training),
        ("McNemar closed form", mcnemar),
        ("bootstrap behavior", bootstrap),
        ("weighted score arithmetic", weighted),
        ("end-to-end determinism", determinism),
        ("transport transparency", transparency),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
