//! Tokenization and sublinear TF-IDF features over word n-grams.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::script::{is_letter, is_token_char};
use crate::error::{Error, Result};

/// Split normalized text on whitespace and punctuation, keeping tokens that
/// contain at least one Latin or Bangla letter.
pub fn tokenize(normalized_text: &str) -> Vec<String> {
    normalized_text
        .split(|c: char| !is_token_char(c))
        .filter(|t| t.chars().any(is_letter))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// `None` keeps every candidate term.
    pub max_features: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            ngram_min: 1,
            ngram_max: 2,
            max_features: Some(15_000),
        }
    }
}

impl FeatureConfig {
    fn validate(&self) -> Result<()> {
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return Err(Error::contract(format!(
                "invalid n-gram range {}..={}",
                self.ngram_min, self.ngram_max
            )));
        }
        Ok(())
    }
}

/// Adjacent n-grams for every n in the configured range, joined by a space.
/// Unigrams first, then bigrams, each in text order.
pub fn ngrams(tokens: &[String], ngram_min: usize, ngram_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in ngram_min..=ngram_max {
        if n > tokens.len() {
            break;
        }
        out.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    out
}

/// Sparse row with strictly increasing column indices and non-zero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Build from `(index, weight)` pairs. Indices must be strictly increasing
    /// and below `dim`; zero weights are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::contract("sparse indices must be strictly increasing"));
            }
        }
        if let Some(&(last, _)) = entries.last() {
            if last >= dim {
                return Err(Error::contract(format!("index {last} out of dimension {dim}")));
            }
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::contract("non-finite feature value"));
        }
        Ok(Self {
            dim,
            entries: entries.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |(i, _)| *i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|(i, v)| v * dense[*i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|(i, v)| (*i, v * factor)).collect(),
        }
    }

    /// Unit L2 norm; the zero vector stays zero.
    pub fn normalized(&self) -> Self {
        let norm = self.norm();
        if norm == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / norm)
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in &self.entries {
            out[*i] = *v;
        }
        out
    }
}

/// Fitted term space: column index, document frequency and smoothed idf per
/// term.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<u64>,
    idf: Vec<f64>,
    n_docs: usize,
    config: FeatureConfig,
}

fn smoothed_idf(n_docs: usize, df: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Fit the vocabulary on tokenized training documents.
///
/// Candidate terms are all n-grams in the configured range. They are ranked by
/// document frequency (descending), ties broken by byte-wise term order, and
/// the first `max_features` are kept; rank becomes the column index. Each
/// kept term gets `idf = ln((1 + N) / (1 + df)) + 1`.
pub fn fit_vocabulary(docs: &[Vec<String>], config: &FeatureConfig) -> Result<Vocabulary> {
    config.validate()?;
    let mut df: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        let unique: HashSet<String> = ngrams(doc, config.ngram_min, config.ngram_max)
            .into_iter()
            .collect();
        for term in unique {
            *df.entry(term).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Fit("every training document is empty".into()));
    }
    let mut ranked: Vec<(String, u64)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(max) = config.max_features {
        ranked.truncate(max);
    }
    let n_docs = docs.len();
    let mut vocab = Vocabulary {
        terms: Vec::with_capacity(ranked.len()),
        index: HashMap::with_capacity(ranked.len()),
        doc_freq: Vec::with_capacity(ranked.len()),
        idf: Vec::with_capacity(ranked.len()),
        n_docs,
        config: config.clone(),
    };
    for (idx, (term, count)) in ranked.into_iter().enumerate() {
        vocab.index.insert(term.clone(), idx);
        vocab.terms.push(term);
        vocab.doc_freq.push(count);
        vocab.idf.push(smoothed_idf(n_docs, count));
    }
    Ok(vocab)
}

const VOCAB_HEADER: &str = "revsent-vocabulary v1";

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, index: usize) -> u64 {
        self.doc_freq[index]
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// Sublinear TF-IDF: each in-vocabulary n-gram with count `c` weighs
    /// `(1 + ln c) * idf`, then the row is L2-normalized. Out-of-vocabulary
    /// n-grams are ignored; a document with none left maps to the zero vector.
    pub fn transform(&self, doc: &[String]) -> SparseVector {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for term in ngrams(doc, self.config.ngram_min, self.config.ngram_max) {
            if let Some(&idx) = self.index.get(&term) {
                *counts.entry(idx).or_default() += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(idx, c)| (idx, (1.0 + f64::from(c).ln()) * self.idf[idx]))
            .collect();
        SparseVector {
            dim: self.len(),
            entries,
        }
        .normalized()
    }

    /// Flat text serialization: a header block, then one
    /// `term<TAB>index<TAB>df<TAB>idf` line per term in index order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<vocabulary>", e);
        writeln!(w, "{VOCAB_HEADER}").map_err(io)?;
        writeln!(w, "n_docs\t{}", self.n_docs).map_err(io)?;
        writeln!(w, "ngram_range\t{}\t{}", self.config.ngram_min, self.config.ngram_max).map_err(io)?;
        match self.config.max_features {
            Some(m) => writeln!(w, "max_features\t{m}"),
            None => writeln!(w, "max_features\tnone"),
        }
        .map_err(io)?;
        writeln!(w, "terms\t{}", self.terms.len()).map_err(io)?;
        for (idx, term) in self.terms.iter().enumerate() {
            if term.contains(['\t', '\n', '\r']) {
                return Err(Error::contract(format!("term {term:?} contains a tab or newline")));
            }
            writeln!(w, "{term}\t{idx}\t{}\t{}", self.doc_freq[idx], self.idf[idx]).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let bad = |message: String| Error::Format {
            path: "<vocabulary>".into(),
            message,
        };
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad("unexpected end of file".into()))?
                .map_err(|e| Error::io("<vocabulary>", e))
        };
        let header = next()?;
        if header != VOCAB_HEADER {
            return Err(bad(format!("unsupported header {header:?}")));
        }
        fn field<'a>(line: &'a str, key: &str) -> std::result::Result<Vec<&'a str>, String> {
            let mut parts = line.split('\t');
            if parts.next() != Some(key) {
                return Err(format!("expected {key:?} line, got {line:?}"));
            }
            Ok(parts.collect())
        }
        fn num<T: std::str::FromStr>(s: Option<&&str>) -> std::result::Result<T, String> {
            s.and_then(|s| s.parse().ok()).ok_or_else(|| format!("bad number {s:?}"))
        }
        let line = next()?;
        let n_docs: usize = num(field(&line, "n_docs").map_err(bad)?.first()).map_err(bad)?;
        let line = next()?;
        let range = field(&line, "ngram_range").map_err(bad)?;
        let ngram_min: usize = num(range.first()).map_err(bad)?;
        let ngram_max: usize = num(range.get(1)).map_err(bad)?;
        let line = next()?;
        let max = field(&line, "max_features").map_err(bad)?;
        let max_features = match max.first() {
            Some(&"none") => None,
            other => Some(num(other).map_err(bad)?),
        };
        let line = next()?;
        let count: usize = num(field(&line, "terms").map_err(bad)?.first()).map_err(bad)?;

        let mut vocab = Vocabulary {
            terms: Vec::with_capacity(count),
            index: HashMap::with_capacity(count),
            doc_freq: Vec::with_capacity(count),
            idf: Vec::with_capacity(count),
            n_docs,
            config: FeatureConfig {
                ngram_min,
                ngram_max,
                max_features,
            },
        };
        for expected in 0..count {
            let line = next()?;
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 {
                return Err(bad(format!("term line {expected} has {} fields", parts.len())));
            }
            let idx: usize = num(parts.get(1)).map_err(bad)?;
            if idx != expected {
                return Err(bad(format!("term index {idx}, expected {expected}")));
            }
            vocab.index.insert(parts[0].to_string(), idx);
            vocab.terms.push(parts[0].to_string());
            vocab.doc_freq.push(num(parts.get(2)).map_err(bad)?);
            vocab.idf.push(num(parts.get(3)).map_err(bad)?);
        }
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn corpus3() -> Vec<Vec<String>> {
        vec![doc(&["good", "app"]), doc(&["bad", "app"]), doc(&["good", "good"])]
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("great app fast"), ["great", "app", "fast"]);
        assert_eq!(tokenize("100% ok"), ["ok"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("অ্যাপটি ভালো।ধীর"), ["অ্যাপটি", "ভালো", "ধীর"]);
        assert_eq!(tokenize("v2 update"), ["v2", "update"]);
    }

    #[test]
    fn top_terms_by_document_frequency() {
        let config = FeatureConfig {
            max_features: Some(2),
            ..FeatureConfig::default()
        };
        let vocab = fit_vocabulary(&corpus3(), &config).unwrap();
        assert_eq!(vocab.terms(), ["app", "good"]);
        assert_eq!(vocab.doc_freq(0), 2);
        assert_eq!(vocab.doc_freq(1), 2);
    }

    #[test]
    fn unlimited_vocabulary_includes_bigrams() {
        let config = FeatureConfig {
            max_features: None,
            ..FeatureConfig::default()
        };
        let vocab = fit_vocabulary(&corpus3(), &config).unwrap();
        for bigram in ["good app", "bad app", "good good"] {
            let idx = vocab.index_of(bigram).unwrap();
            assert_eq!(vocab.doc_freq(idx), 1, "{bigram}");
        }
        assert_eq!(vocab.len(), 6);
    }

    #[test]
    fn smoothed_idf_value() {
        let vocab = fit_vocabulary(&corpus3(), &FeatureConfig::default()).unwrap();
        let idf = vocab.idf(vocab.index_of("good").unwrap());
        assert!((idf - ((4.0f64 / 3.0).ln() + 1.0)).abs() < 1e-15);
        assert!((idf - 1.287682).abs() < 1e-6);
    }

    #[test]
    fn transform_examples() {
        let config = FeatureConfig {
            max_features: Some(2),
            ..FeatureConfig::default()
        };
        let vocab = fit_vocabulary(&corpus3(), &config).unwrap();
        let v = vocab.transform(&doc(&["good", "app"]));
        assert_eq!(v.nnz(), 2);
        for (_, w) in v.iter() {
            assert!((w - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let v = vocab.transform(&doc(&["good", "good"]));
        assert_eq!(v.entries(), &[(vocab.index_of("good").unwrap(), 1.0)]);
        let v = vocab.transform(&doc(&["unseen"]));
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn all_empty_corpus_fails() {
        let err = fit_vocabulary(&[vec![], vec![]], &FeatureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Fit(_)));
    }

    #[test]
    fn serialization_round_trips() {
        let vocab = fit_vocabulary(&corpus3(), &FeatureConfig::default()).unwrap();
        let mut buf = Vec::new();
        vocab.write_to(&mut buf).unwrap();
        let back = Vocabulary::read_from(&buf[..]).unwrap();
        assert_eq!(back, vocab);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn sparse_vector_rejects_unsorted() {
        assert!(SparseVector::new(5, vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(SparseVector::new(2, vec![(2, 1.0)]).is_err());
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g", "h"]).prop_map(str::to_string)
    }

    fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
        prop::collection::vec(prop::collection::vec(word(), 1..8), 1..12)
    }

    proptest! {
        #[test]
        fn transformed_rows_are_unit_norm(docs in corpus()) {
            let vocab = fit_vocabulary(&docs, &FeatureConfig::default()).unwrap();
            for d in &docs {
                let v = vocab.transform(d);
                prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn unigram_transform_ignores_token_order(docs in corpus(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let config = FeatureConfig { ngram_min: 1, ngram_max: 1, max_features: None };
            let vocab = fit_vocabulary(&docs, &config).unwrap();
            let mut rng = crate::seed::rng(seed);
            for d in &docs {
                let mut shuffled = d.clone();
                shuffled.shuffle(&mut rng);
                prop_assert_eq!(vocab.transform(d), vocab.transform(&shuffled));
            }
        }

        #[test]
        fn fitting_is_deterministic(docs in corpus()) {
            let a = fit_vocabulary(&docs, &FeatureConfig::default()).unwrap();
            let b = fit_vocabulary(&docs, &FeatureConfig::default()).unwrap();
            let (mut x, mut y) = (Vec::new(), Vec::new());
            a.write_to(&mut x).unwrap();
            b.write_to(&mut y).unwrap();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn distinct_df_orders_by_df(k in 1usize..7) {
            // term i appears in exactly i + 1 documents
            let docs: Vec<Vec<String>> = (0..k)
                .map(|d| (0..k).filter(|t| *t >= d).map(|t| format!("t{t}")).collect())
                .collect();
            let config = FeatureConfig { ngram_min: 1, ngram_max: 1, max_features: None };
            let vocab = fit_vocabulary(&docs, &config).unwrap();
            let dfs: Vec<u64> = (0..vocab.len()).map(|i| vocab.doc_freq(i)).collect();
            let mut sorted = dfs.clone();
            sorted.sort_by(|a, b| b.cmp(a));
            prop_assert_eq!(dfs, sorted);
        }
    }
}
