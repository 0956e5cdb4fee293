use revsent::client::read_label_file;
use revsent::corpus::{build_corpus, parse_reviews, CorpusConfig, DropStage};
use revsent::features::{fit_vocabulary, tokenize, FeatureConfig};
use revsent::labeling::{consensus_filter, join_model_labels, star_to_sentiment, SentimentLabel};
use revsent::models::{predict, train, LrConfig, Params};
use revsent::stats::{classification_metrics, stratified_split};
use revsent_testkit::{funnel_dump, planted_corpus};

#[test]
fn funnel_counts_reconcile() {
    let dump = funnel_dump();
    let parsed = parse_reviews(dump.jsonl.as_bytes(), &[]).unwrap();
    assert!(parsed.rejects.is_empty());
    assert_eq!(parsed.reviews.len(), dump.raw);

    let config = CorpusConfig::default();
    let build = build_corpus(&parsed.reviews, &config, &config.normalizer().unwrap());
    let count = |stage| build.drops.iter().filter(|d| d.stage == stage).count();
    assert_eq!(count(DropStage::Duplicate), dump.duplicates);
    assert_eq!(count(DropStage::Noisy), dump.noisy);
    assert_eq!(count(DropStage::Language), dump.language);
    assert_eq!(count(DropStage::Empty), dump.empty);
    assert_eq!(build.clean.len(), dump.kept);
    assert_eq!(build.clean.len() + build.drops.len(), dump.raw);
    assert_eq!(build.stats.totals.raw_count, dump.raw);
    assert_eq!(build.stats.totals.clean_count, dump.kept);
    let per_app: usize = build.stats.apps.iter().map(|a| a.clean_count).sum();
    assert_eq!(per_app, dump.kept);
}

#[test]
fn planted_corpus_consensus_and_training() {
    let planted = planted_corpus(3);
    let parsed = parse_reviews(planted.dump_jsonl().as_bytes(), &[]).unwrap();
    let config = CorpusConfig::default();
    let corpus = build_corpus(&parsed.reviews, &config, &config.normalizer().unwrap()).clean;
    assert_eq!(corpus.len(), 1000);

    let dir = tempfile::tempdir().unwrap();
    let labels_path = dir.path().join("labels.jsonl");
    std::fs::write(&labels_path, planted.sentiment_jsonl()).unwrap();
    let labels = read_label_file(&labels_path).unwrap().records;

    let stars: Vec<SentimentLabel> = corpus
        .iter()
        .map(|r| star_to_sentiment(r.review.rating).unwrap())
        .collect();
    let split = stratified_split(&stars, 0.2, 11).unwrap();
    let train_reviews: Vec<_> = split.train.iter().map(|&i| corpus[i].clone()).collect();
    let joined = join_model_labels(&train_reviews, &labels).unwrap();
    assert!(joined.missing.is_empty());
    assert_eq!(joined.unknown.len(), split.test.len());
    let (kept, dropped) = consensus_filter(joined.labeled).unwrap();
    // The planted model agrees with the stars about 90% of the time.
    let share = kept.len() as f64 / (kept.len() + dropped.len()) as f64;
    assert!((0.85..0.95).contains(&share), "{share}");

    let docs: Vec<Vec<String>> = kept.iter().map(|r| tokenize(&r.review.normalized_text)).collect();
    let vocab = fit_vocabulary(&docs, &FeatureConfig::default()).unwrap();
    let xs: Vec<_> = docs.iter().map(|d| vocab.transform(d)).collect();
    let ys: Vec<_> = kept.iter().map(|r| r.star_label).collect();
    let test_xs: Vec<_> = split
        .test
        .iter()
        .map(|&i| vocab.transform(&tokenize(&corpus[i].normalized_text)))
        .collect();
    let test_ys: Vec<_> = split.test.iter().map(|&i| stars[i]).collect();
    let model = train(&Params::LogisticRegression(LrConfig::default()), &xs, &ys, 0).unwrap();
    let (_, m) = classification_metrics(&test_ys, &predict(&model, &test_xs).unwrap().labels).unwrap();
    assert!(m.accuracy >= 0.9, "{}", m.accuracy);
}
