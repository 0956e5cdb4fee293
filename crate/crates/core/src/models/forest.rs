use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_training_set, Classifier, N_CLASSES};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::labeling::SentimentLabel;
use crate::seed::{derived_rng, Rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Minimum (bootstrap-weighted) sample count in each child of a split.
    pub min_leaf: usize,
    /// Features inspected per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 16,
            min_leaf: 2,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { counts: [u64; N_CLASSES] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_counts(&self, x: &SparseVector) -> [u64; N_CLASSES] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    pub fn vote(&self, x: &SparseVector) -> usize {
        argmax(&self.leaf_counts(x).map(|c| c as f64))
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub config: RfConfig,
    pub seed: u64,
    pub dim: usize,
    pub features_per_split: usize,
    pub trees: Vec<Tree>,
}

/// Column-major copy of the training rows.
struct Columns {
    cols: Vec<Vec<(usize, f64)>>,
}

impl Columns {
    fn new(xs: &[SparseVector], dim: usize) -> Self {
        let mut cols = vec![Vec::new(); dim];
        for (i, x) in xs.iter().enumerate() {
            for (j, v) in x.iter() {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        Self { cols }
    }
}

struct Builder<'a> {
    xs: &'a [SparseVector],
    ys: &'a [SentimentLabel],
    columns: &'a Columns,
    weight: Vec<u64>,
    /// Id of the node a row currently sits in; rows outside the sample hold
    /// `usize::MAX`.
    stamp: Vec<usize>,
    config: &'a RfConfig,
    k: usize,
    rng: Rng,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn weighted_gini(counts: &[u64; N_CLASSES]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    total as f64 - sq / total as f64
}

impl Builder<'_> {
    fn histogram(&self, rows: &[usize]) -> [u64; N_CLASSES] {
        let mut counts = [0u64; N_CLASSES];
        for &r in rows {
            counts[self.ys[r].index()] += self.weight[r];
        }
        counts
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.histogram(&rows);
        self.nodes.push(Node::Leaf { counts });
        let total: u64 = counts.iter().sum();
        let pure = counts.iter().filter(|c| **c > 0).count() <= 1;
        if pure || depth >= self.config.max_depth || total < 2 * self.config.min_leaf as u64 {
            return id;
        }
        for &r in &rows {
            self.stamp[r] = id;
        }
        let Some(choice) = self.best_split(id, &rows, &counts) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.xs[r].get(choice.feature) <= choice.threshold);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, id: usize, rows: &[usize], counts: &[u64; N_CLASSES]) -> Option<SplitChoice> {
        let mut present: Vec<usize> = rows
            .iter()
            .flat_map(|&r| self.xs[r].iter().filter(|(_, v)| *v != 0.0).map(|(j, _)| j))
            .collect();
        present.sort_unstable();
        present.dedup();
        present.shuffle(&mut self.rng);

        let mut best: Option<SplitChoice> = None;
        let mut inspected = 0;
        for feature in present {
            if inspected >= self.k {
                break;
            }
            let mut values: Vec<(f64, usize, u64)> = self.columns.cols[feature]
                .iter()
                .filter(|(r, _)| self.stamp[*r] == id)
                .map(|&(r, v)| (v, self.ys[r].index(), self.weight[r]))
                .collect();
            let mut zeros = *counts;
            for &(_, c, w) in &values {
                zeros[c] -= w;
            }
            let zero_total: u64 = zeros.iter().sum();
            if zero_total > 0 {
                values.extend((0..N_CLASSES).filter(|&c| zeros[c] > 0).map(|c| (0.0, c, zeros[c])));
            }
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values.first().map(|v| v.0) == values.last().map(|v| v.0) {
                continue;
            }
            inspected += 1;
            if let Some(found) = self.scan(feature, &values, counts) {
                if best.as_ref().map_or(true, |b| found.impurity < b.impurity) {
                    best = Some(found);
                }
            }
        }
        best
    }

    /// Best threshold for one feature given `(value, class, weight)` sorted by
    /// value.
    fn scan(&self, feature: usize, values: &[(f64, usize, u64)], counts: &[u64; N_CLASSES]) -> Option<SplitChoice> {
        let total: u64 = counts.iter().sum();
        let min_leaf = self.config.min_leaf as u64;
        let mut left = [0u64; N_CLASSES];
        let mut left_total = 0u64;
        let mut best: Option<SplitChoice> = None;
        for i in 0..values.len() - 1 {
            let (v, c, w) = values[i];
            left[c] += w;
            left_total += w;
            let next = values[i + 1].0;
            if next == v {
                continue;
            }
            if left_total < min_leaf || total - left_total < min_leaf {
                continue;
            }
            let mut right = *counts;
            for k in 0..N_CLASSES {
                right[k] -= left[k];
            }
            let impurity = weighted_gini(&left) + weighted_gini(&right);
            if best.as_ref().map_or(true, |b| impurity < b.impurity) {
                let mut threshold = v + (next - v) / 2.0;
                if threshold >= next {
                    threshold = v;
                }
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }
}

fn grow_tree(xs: &[SparseVector], ys: &[SentimentLabel], columns: &Columns, config: &RfConfig, k: usize, mut rng: Rng) -> Tree {
    let n = xs.len();
    let mut weight = vec![0u64; n];
    if config.bootstrap {
        for _ in 0..n {
            weight[rng.gen_range(0..n)] += 1;
        }
    } else {
        weight.fill(1);
    }
    let rows: Vec<usize> = (0..n).filter(|&i| weight[i] > 0).collect();
    let mut builder = Builder {
        xs,
        ys,
        columns,
        weight,
        stamp: vec![usize::MAX; n],
        config,
        k,
        rng,
        nodes: Vec::new(),
    };
    builder.build(rows, 0);
    Tree { nodes: builder.nodes }
}

/// Random forest of Gini trees. Tree `t` draws its bootstrap sample and
/// feature orders from its own derived seed, so trees are grown in parallel
/// with results independent of scheduling. At each node the features that
/// are nonzero somewhere in the node are shuffled and inspected in turn
/// until `features_per_split` non-constant ones have been scored.
pub fn train_rf(xs: &[SparseVector], ys: &[SentimentLabel], config: &RfConfig, seed: u64) -> Result<RfModel> {
    let dim = check_training_set(xs, ys)?;
    if xs.len() < 2 {
        return Err(Error::contract("random forest needs at least two rows"));
    }
    if config.n_trees == 0 {
        return Err(Error::contract("n_trees must be at least 1"));
    }
    if config.min_leaf == 0 {
        return Err(Error::contract("min_leaf must be at least 1"));
    }
    let k = config
        .max_features
        .unwrap_or_else(|| (dim as f64).sqrt().floor() as usize)
        .max(1);
    let columns = Columns::new(xs, dim);
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(xs, ys, &columns, config, k, derived_rng(seed, Stream::Tree, t as u64)))
        .collect();
    Ok(RfModel {
        config: config.clone(),
        seed,
        dim,
        features_per_split: k,
        trees,
    })
}

impl Classifier for RfModel {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Fraction of trees voting for each class.
    fn scores(&self, x: &SparseVector) -> [f64; N_CLASSES] {
        let mut votes = [0u64; N_CLASSES];
        for tree in &self.trees {
            votes[tree.vote(x)] += 1;
        }
        votes.map(|v| v as f64 / self.trees.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::predict;
    use SentimentLabel::*;

    fn step_data() -> (Vec<SparseVector>, Vec<SentimentLabel>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..10 {
            xs.push(SparseVector::from_dense(&[0.0]));
            ys.push(Negative);
            xs.push(SparseVector::from_dense(&[1.0]));
            ys.push(Positive);
        }
        (xs, ys)
    }

    #[test]
    fn single_stump_splits_between_values() {
        let (xs, ys) = step_data();
        let config = RfConfig {
            n_trees: 1,
            max_depth: 1,
            min_leaf: 1,
            max_features: None,
            bootstrap: false,
        };
        let model = train_rf(&xs, &ys, &config, 0).unwrap();
        match &model.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!(*threshold > 0.0 && *threshold < 1.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(predict(&model, &xs).unwrap().labels, ys);
    }

    #[test]
    fn leaf_histograms_sum_to_sample_count() {
        let (xs, ys) = step_data();
        let model = train_rf(&xs, &ys, &RfConfig { n_trees: 5, ..RfConfig::default() }, 4).unwrap();
        for tree in &model.trees {
            let total: u64 = tree
                .nodes
                .iter()
                .filter_map(|n| match n {
                    Node::Leaf { counts } => Some(counts.iter().sum::<u64>()),
                    Node::Split { .. } => None,
                })
                .sum();
            assert_eq!(total, xs.len() as u64);
        }
    }

    #[test]
    fn pure_input_gives_single_leaves() {
        let xs: Vec<SparseVector> = (0..6).map(|i| SparseVector::from_dense(&[i as f64, 1.0])).collect();
        let ys = vec![Neutral; 6];
        let model = train_rf(&xs, &ys, &RfConfig { n_trees: 3, ..RfConfig::default() }, 2).unwrap();
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1);
        }
        assert!(predict(&model, &xs).unwrap().labels.iter().all(|l| *l == Neutral));
    }

    #[test]
    fn deterministic_and_votes_sum_to_one() {
        let xs: Vec<SparseVector> = (0..30)
            .map(|i| SparseVector::from_dense(&[(i % 7) as f64, (i % 3) as f64, 0.0, (i % 5) as f64]))
            .collect();
        let ys: Vec<SentimentLabel> = (0..30).map(|i| SentimentLabel::from_index(i % 3).unwrap()).collect();
        let config = RfConfig { n_trees: 15, ..RfConfig::default() };
        let a = train_rf(&xs, &ys, &config, 8).unwrap();
        let b = train_rf(&xs, &ys, &config, 8).unwrap();
        assert_eq!(a, b);
        for x in &xs {
            let s: f64 = a.scores(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let xs: Vec<SparseVector> = (0..40).map(|i| SparseVector::from_dense(&[i as f64])).collect();
        let ys: Vec<SentimentLabel> = (0..40).map(|i| SentimentLabel::from_index(i % 3).unwrap()).collect();
        let config = RfConfig {
            n_trees: 4,
            max_depth: 3,
            min_leaf: 1,
            ..RfConfig::default()
        };
        let model = train_rf(&xs, &ys, &config, 1).unwrap();
        assert!(model.trees.iter().all(|t| t.depth() <= 3));
    }
}
