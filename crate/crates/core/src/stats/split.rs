use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;
use crate::models::N_CLASSES;
use crate::seed::{derived_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Ascending.
    pub train: Vec<usize>,
    /// Ascending.
    pub test: Vec<usize>,
    pub ratio: f64,
    pub seed: u64,
}

fn members_by_class(labels: &[SentimentLabel]) -> [Vec<usize>; N_CLASSES] {
    let mut out: [Vec<usize>; N_CLASSES] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        out[l.index()].push(i);
    }
    out
}

/// Per-class test sizes: floor of `count * ratio`, then the units still
/// missing from `round(n * ratio)` go to the largest fractional remainders,
/// lower class index first on ties.
pub fn test_quotas(counts: [usize; N_CLASSES], ratio: f64) -> [usize; N_CLASSES] {
    let n: usize = counts.iter().sum();
    let target = (n as f64 * ratio).round() as usize;
    let exact = counts.map(|c| c as f64 * ratio);
    let mut quotas = exact.map(|e| e.floor() as usize);
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..N_CLASSES).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(target.saturating_sub(assigned)) {
        if quotas[k] < counts[k] {
            quotas[k] += 1;
        }
    }
    quotas
}

/// Seeded stratified train/test split with `ratio` the test share.
pub fn stratified_split(labels: &[SentimentLabel], ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::contract(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    if labels.len() < 2 {
        return Err(Error::contract("stratified split needs at least two samples"));
    }
    let mut rng = derived_rng(seed, Stream::Split, 0);
    let mut classes = members_by_class(labels);
    let quotas = test_quotas(classes.each_ref().map(Vec::len), ratio);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (members, quota) in classes.iter_mut().zip(quotas) {
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..quota]);
        train.extend_from_slice(&members[quota..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        test,
        ratio,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Folds {
    /// `folds[f]` holds the held-out indices of fold `f`, ascending.
    pub folds: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl Folds {
    /// Indices outside fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Seeded stratified k-fold assignment. Each class is shuffled and dealt
/// round-robin, continuing from where the previous class stopped so fold
/// sizes stay within one of each other. A class with fewer than `k` members
/// is kept and reported in `warnings`.
pub fn stratified_kfold(labels: &[SentimentLabel], k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::contract("k-fold needs k >= 2"));
    }
    if labels.len() < k {
        return Err(Error::contract(format!("{} samples cannot fill {k} folds", labels.len())));
    }
    let mut rng = derived_rng(seed, Stream::Folds, 0);
    let mut folds = vec![Vec::new(); k];
    let mut warnings = Vec::new();
    let mut next = 0;
    for (class, mut members) in members_by_class(labels).into_iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            let label = SentimentLabel::from_index(class).expect("class index");
            warnings.push(format!(
                "class {label} has {} members, fewer than {k} folds",
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(Folds { folds, warnings })
}
