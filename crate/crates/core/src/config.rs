//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::client::ModelEndpoint;
use crate::corpus::CorpusConfig;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::models::ModelGrids;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Review dump read by `ingest`.
    pub input: Option<PathBuf>,
    pub corpus: CorpusConfig,
    pub seed: u64,
    /// Share of reviews held out for testing.
    pub split_ratio: f64,
    pub features: FeatureConfig,
    pub grids: ModelGrids,
    pub cv_folds: usize,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
    /// Warn when more than this share of training reviews lack a model label.
    pub missing_label_warning: f64,
    /// Line-delimited model label / prediction files.
    pub labels_files: Vec<PathBuf>,
    /// Model whose labels drive consensus filtering. May be left unset when
    /// the label sources carry a single model_id.
    pub consensus_model: Option<String>,
    pub absa_file: Option<PathBuf>,
    /// When set, labels and ABSA records come from the sidecar instead of
    /// files. The sidecar receives raw review text.
    pub endpoint: Option<ModelEndpoint>,
    /// Replacement aspect lexicon directory (`en/`, `bn/`).
    pub aspects_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Treat rejected input records as a validation failure.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            corpus: CorpusConfig::default(),
            seed: 42,
            split_ratio: 0.2,
            features: FeatureConfig::default(),
            grids: ModelGrids::default(),
            cv_folds: 5,
            bootstrap_resamples: 2000,
            confidence_level: 0.95,
            missing_label_warning: 0.5,
            labels_files: Vec::new(),
            consensus_model: None,
            absa_file: None,
            endpoint: None,
            aspects_dir: None,
            out_dir: PathBuf::from("runs"),
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio must be in (0, 1), got {}", self.split_ratio));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        if self.bootstrap_resamples < 100 {
            return bad(format!(
                "bootstrap_resamples must be at least 100, got {}",
                self.bootstrap_resamples
            ));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return bad(format!("confidence_level must be in (0, 1), got {}", self.confidence_level));
        }
        if !(0.0..=1.0).contains(&self.missing_label_warning) {
            return bad("missing_label_warning must be in [0, 1]".into());
        }
        if self.features.ngram_min == 0 || self.features.ngram_min > self.features.ngram_max {
            return bad("feature n-gram range is empty".into());
        }
        let g = &self.grids;
        if g.nb_alpha.is_empty()
            || g.lr_lambda.is_empty()
            || g.svm_lambda.is_empty()
            || g.svm_epochs.is_empty()
            || g.rf_n_trees.is_empty()
            || g.rf_max_depth.is_empty()
        {
            return bad("every model grid needs at least one value".into());
        }
        if let Some(endpoint) = &self.endpoint {
            endpoint.validate().map_err(|e| Error::Validation(e.to_string()))?;
            if !self.labels_files.is_empty() || self.absa_file.is_some() {
                return bad("set either an endpoint or label/ABSA files, not both".into());
            }
        }
        Ok(())
    }
}
