//! Deterministic analytics pipeline for bilingual (English/Bangla) app-store
//! reviews.
//!
//! The stages mirror how the data flows:
//!
//! * [`corpus`]: parse review dumps, drop duplicates/noise, detect language by
//!   script and normalize text.
//! * [`labeling`]: star-derived labels, joining external model labels,
//!   consensus filtering and Cohen's kappa.
//! * [`features`]: tokenization and sublinear TF-IDF over unigrams + bigrams.
//! * [`models`]: multinomial naive Bayes, logistic regression, linear SVM and
//!   random forest, plus cross-validated grid search.
//! * [`stats`]: stratified splits, metrics, bootstrap CIs, McNemar's test and
//!   language-stratified evaluation.
//! * [`analytics`]: thumbs-up weighted app scores, aspect aggregation and
//!   monthly trends.
//! * [`client`]: label files and the HTTP client for the inference sidecar.

pub mod analytics;
pub mod client;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod labeling;
pub mod models;
pub mod report;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};

/// Version string embedded in every report.
pub const VERSION: &str = concat!("revsent ", env!("CARGO_PKG_VERSION"));
