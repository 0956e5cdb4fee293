use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict, train, LrConfig, ModelFamily, Params, RfConfig, SvmConfig};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::labeling::SentimentLabel;
use crate::seed::{derive_seed, Stream};
use crate::stats::{macro_f1, stratified_kfold};

/// Hyperparameter grids for the four families. Candidates are enumerated
/// with the first listed axis outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelGrids {
    pub nb_alpha: Vec<f64>,
    pub lr_lambda: Vec<f64>,
    pub lr_max_iters: usize,
    pub lr_tol: f64,
    pub svm_lambda: Vec<f64>,
    pub svm_epochs: Vec<usize>,
    pub rf_n_trees: Vec<usize>,
    pub rf_max_depth: Vec<usize>,
    pub rf_min_leaf: usize,
}

impl Default for ModelGrids {
    fn default() -> Self {
        Self {
            nb_alpha: vec![0.1, 0.5, 1.0],
            lr_lambda: vec![1e-4, 1e-3, 1e-2],
            lr_max_iters: 1000,
            lr_tol: 1e-6,
            svm_lambda: vec![1e-4, 1e-3, 1e-2],
            svm_epochs: vec![20, 50],
            rf_n_trees: vec![100, 200],
            rf_max_depth: vec![16, 32],
            rf_min_leaf: 2,
        }
    }
}

impl ModelGrids {
    pub fn candidates(&self, family: ModelFamily) -> Vec<Params> {
        match family {
            ModelFamily::NaiveBayes => self.nb_alpha.iter().map(|&alpha| Params::NaiveBayes { alpha }).collect(),
            ModelFamily::LogisticRegression => self
                .lr_lambda
                .iter()
                .map(|&lambda| {
                    Params::LogisticRegression(LrConfig {
                        lambda,
                        max_iters: self.lr_max_iters,
                        tol: self.lr_tol,
                        ..LrConfig::default()
                    })
                })
                .collect(),
            ModelFamily::LinearSvm => self
                .svm_lambda
                .iter()
                .flat_map(|&lambda| {
                    self.svm_epochs
                        .iter()
                        .map(move |&epochs| Params::LinearSvm(SvmConfig { lambda, epochs }))
                })
                .collect(),
            ModelFamily::RandomForest => self
                .rf_n_trees
                .iter()
                .flat_map(|&n_trees| {
                    self.rf_max_depth.iter().map(move |&max_depth| {
                        Params::RandomForest(RfConfig {
                            n_trees,
                            max_depth,
                            min_leaf: self.rf_min_leaf,
                            ..RfConfig::default()
                        })
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub params: Params,
    pub fold_macro_f1: Vec<f64>,
    pub mean_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub candidates: Vec<CandidateScore>,
    pub winner: usize,
    pub k: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl GridSearchResult {
    pub fn best(&self) -> &CandidateScore {
        &self.candidates[self.winner]
    }
}

/// Seed used to train candidate `index` on fold `fold`.
pub fn candidate_seed(root: u64, index: usize, fold: usize) -> u64 {
    derive_seed(derive_seed(root, Stream::Candidate, index as u64), Stream::Candidate, fold as u64)
}

/// Stratified k-fold search maximizing mean macro-F1; the earliest candidate
/// wins ties. Every (candidate, fold) fit is independent and runs in
/// parallel.
pub fn grid_search(
    candidates: &[Params],
    xs: &[SparseVector],
    ys: &[SentimentLabel],
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if candidates.is_empty() {
        return Err(Error::contract("grid is empty"));
    }
    if xs.len() != ys.len() {
        return Err(Error::contract(format!("{} rows but {} labels", xs.len(), ys.len())));
    }
    let folds = stratified_kfold(ys, k, derive_seed(seed, Stream::Folds, 0))?;
    let splits: Vec<(Vec<usize>, &[usize])> = (0..k)
        .map(|f| (folds.train_indices(f), folds.folds[f].as_slice()))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train_idx, test_idx) = &splits[f];
            let train_x: Vec<SparseVector> = train_idx.iter().map(|&i| xs[i].clone()).collect();
            let train_y: Vec<SentimentLabel> = train_idx.iter().map(|&i| ys[i]).collect();
            let test_x: Vec<SparseVector> = test_idx.iter().map(|&i| xs[i].clone()).collect();
            let test_y: Vec<SentimentLabel> = test_idx.iter().map(|&i| ys[i]).collect();
            let model = train(&candidates[c], &train_x, &train_y, candidate_seed(seed, c, f))?;
            let predicted = predict(&model, &test_x)?;
            macro_f1(&test_y, &predicted.labels)
        })
        .collect::<Result<_>>()?;
    let scored: Vec<CandidateScore> = candidates
        .iter()
        .enumerate()
        .map(|(c, params)| {
            let fold_macro_f1 = scores[c * k..(c + 1) * k].to_vec();
            let mean_macro_f1 = fold_macro_f1.iter().sum::<f64>() / k as f64;
            CandidateScore {
                params: params.clone(),
                fold_macro_f1,
                mean_macro_f1,
            }
        })
        .collect();
    let mut winner = 0;
    for (i, c) in scored.iter().enumerate() {
        if c.mean_macro_f1 > scored[winner].mean_macro_f1 {
            winner = i;
        }
    }
    Ok(GridSearchResult {
        candidates: scored,
        winner,
        k,
        seed,
        warnings: folds.warnings,
    })
}
