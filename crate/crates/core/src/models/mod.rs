//! Classifiers over [`SparseVector`] rows.
//!
//! Class indices follow [`SentimentLabel`] order everywhere: negative 0,
//! neutral 1, positive 2. Every argmax breaks ties toward the lower index.

mod forest;
mod grid;
mod logreg;
mod nb;
mod svm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::labeling::SentimentLabel;

pub use forest::{train_rf, Node, RfConfig, RfModel, Tree};
pub use grid::{candidate_seed, grid_search, CandidateScore, GridSearchResult, ModelGrids};
pub use logreg::{train_logreg, LogRegObjective, LrConfig, LrModel, LrTrainingLog};
pub use nb::{train_nb, NbModel};
pub use svm::{train_svm, SvmConfig, SvmModel};

pub const N_CLASSES: usize = 3;

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64; N_CLASSES]) -> usize {
    let mut best = 0;
    for k in 1..N_CLASSES {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    best
}

pub trait Classifier {
    /// Feature dimension the model was fitted on.
    fn dim(&self) -> usize;

    /// Per-class scores for one row. Log-posteriors for naive Bayes,
    /// probabilities for logistic regression, margins for the SVM and vote
    /// fractions for the forest.
    fn scores(&self, x: &SparseVector) -> [f64; N_CLASSES];

    fn predict_one(&self, x: &SparseVector) -> SentimentLabel {
        SentimentLabel::from_index(argmax(&self.scores(x))).expect("class index")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<SentimentLabel>,
    pub scores: Vec<[f64; N_CLASSES]>,
}

/// Score and label every row. Rows must match the model's dimension.
pub fn predict<M: Classifier + ?Sized>(model: &M, xs: &[SparseVector]) -> Result<Predictions> {
    if let Some(bad) = xs.iter().find(|x| x.dim() != model.dim()) {
        return Err(Error::contract(format!(
            "row dimension {} does not match model dimension {}",
            bad.dim(),
            model.dim()
        )));
    }
    let scores: Vec<[f64; N_CLASSES]> = xs.iter().map(|x| model.scores(x)).collect();
    let labels = scores
        .iter()
        .map(|s| SentimentLabel::from_index(argmax(s)).expect("class index"))
        .collect();
    Ok(Predictions { labels, scores })
}

pub(crate) fn check_training_set(xs: &[SparseVector], ys: &[SentimentLabel]) -> Result<usize> {
    if xs.is_empty() {
        return Err(Error::contract("training set is empty"));
    }
    if xs.len() != ys.len() {
        return Err(Error::contract(format!(
            "{} rows but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let dim = xs[0].dim();
    if xs.iter().any(|x| x.dim() != dim) {
        return Err(Error::contract("training rows differ in dimension"));
    }
    if xs.iter().flat_map(|x| x.iter()).any(|(_, v)| !v.is_finite()) {
        return Err(Error::contract("non-finite feature value"));
    }
    Ok(dim)
}

pub(crate) fn class_counts(ys: &[SentimentLabel]) -> [u64; N_CLASSES] {
    let mut counts = [0u64; N_CLASSES];
    for y in ys {
        counts[y.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    NaiveBayes,
    LogisticRegression,
    LinearSvm,
    RandomForest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::NaiveBayes,
        ModelFamily::LogisticRegression,
        ModelFamily::LinearSvm,
        ModelFamily::RandomForest,
    ];

    /// Short id used in file names and report rows.
    pub fn id(self) -> &'static str {
        match self {
            ModelFamily::NaiveBayes => "nb",
            ModelFamily::LogisticRegression => "lr",
            ModelFamily::LinearSvm => "svm",
            ModelFamily::RandomForest => "rf",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelFamily::NaiveBayes => "Naive Bayes",
            ModelFamily::LogisticRegression => "Logistic Regression",
            ModelFamily::LinearSvm => "Linear SVM",
            ModelFamily::RandomForest => "Random Forest",
        }
    }
}

/// One concrete hyperparameter setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Params {
    NaiveBayes { alpha: f64 },
    LogisticRegression(LrConfig),
    LinearSvm(SvmConfig),
    RandomForest(RfConfig),
}

impl Params {
    pub fn family(&self) -> ModelFamily {
        match self {
            Params::NaiveBayes { .. } => ModelFamily::NaiveBayes,
            Params::LogisticRegression(_) => ModelFamily::LogisticRegression,
            Params::LinearSvm(_) => ModelFamily::LinearSvm,
            Params::RandomForest(_) => ModelFamily::RandomForest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    NaiveBayes(NbModel),
    LogisticRegression(LrModel),
    LinearSvm(SvmModel),
    RandomForest(RfModel),
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::NaiveBayes(_) => ModelFamily::NaiveBayes,
            TrainedModel::LogisticRegression(_) => ModelFamily::LogisticRegression,
            TrainedModel::LinearSvm(_) => ModelFamily::LinearSvm,
            TrainedModel::RandomForest(_) => ModelFamily::RandomForest,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            TrainedModel::NaiveBayes(m) => m,
            TrainedModel::LogisticRegression(m) => m,
            TrainedModel::LinearSvm(m) => m,
            TrainedModel::RandomForest(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn scores(&self, x: &SparseVector) -> [f64; N_CLASSES] {
        self.inner().scores(x)
    }
}

/// Fit one model. `seed` only matters for the SVM and the forest.
pub fn train(params: &Params, xs: &[SparseVector], ys: &[SentimentLabel], seed: u64) -> Result<TrainedModel> {
    Ok(match params {
        Params::NaiveBayes { alpha } => TrainedModel::NaiveBayes(train_nb(xs, ys, *alpha)?),
        Params::LogisticRegression(c) => TrainedModel::LogisticRegression(train_logreg(xs, ys, c)?),
        Params::LinearSvm(c) => TrainedModel::LinearSvm(train_svm(xs, ys, c, seed)?),
        Params::RandomForest(c) => TrainedModel::RandomForest(train_rf(xs, ys, c, seed)?),
    })
}
