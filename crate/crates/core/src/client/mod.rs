//! Adapters for external transformer predictions: line-delimited label files
//! and a blocking HTTP client for the v1 inference sidecar. Both produce the
//! same record types, so downstream stages never know which transport ran.

mod http;
mod records;

pub use http::{
    fetch_absa, fetch_absa_all, fetch_sentiment, fetch_sentiment_all, health, AbsaItem,
    BatchFailure, Batched, Health, ModelEndpoint, SentimentItem,
};
pub use records::{
    read_absa_file, read_jsonl, read_label_file, write_jsonl, LabelFile, LabelReject, ModelLabelRecord,
};
