use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::records::ModelLabelRecord;
use crate::analytics::{Aspect, AspectPolarityRecord};
use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;

const PROTOCOL_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelEndpoint {
    /// e.g. `http://127.0.0.1:8765`; the `/v1/...` paths are appended.
    pub base_url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub batch_size: usize,
    /// Batches in flight at once.
    pub parallelism: usize,
    /// First retry delay; doubles per attempt.
    pub backoff_ms: u64,
    /// Stamped onto every sentiment record fetched from this endpoint.
    pub model_id: String,
}

impl Default for ModelEndpoint {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8765".into(),
            timeout_ms: 30_000,
            max_retries: 2,
            batch_size: 32,
            parallelism: 2,
            backoff_ms: 250,
            model_id: "xlmr-ots".into(),
        }
    }
}

impl ModelEndpoint {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::contract("endpoint batch_size must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::contract("endpoint parallelism must be at least 1"));
        }
        Ok(())
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(self.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentimentItem {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbsaItem {
    pub id: String,
    pub text: String,
    pub aspect: Aspect,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize, Serialize)]
pub struct Health {
    pub status: String,
    pub models: Vec<String>,
}

/// Why one attempt at a batch failed.
enum Attempt {
    /// Connection trouble, timeouts, 5xx, or item-level errors: retry.
    Retry(String),
    /// The server broke the wire contract: give up immediately.
    Fatal(Error),
}

fn post(endpoint: &ModelEndpoint, path: &str, body: &Value) -> std::result::Result<String, Attempt> {
    let payload = serde_json::to_vec(body).expect("request serializes");
    let mut resp = endpoint
        .agent()
        .post(&endpoint.url(path))
        .header("content-type", "application/json")
        .send(&payload[..])
        .map_err(|e| Attempt::Retry(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| Attempt::Retry(e.to_string()))?;
    match status {
        200..=299 => Ok(text),
        500..=599 => Err(Attempt::Retry(format!("HTTP {status}"))),
        _ => Err(Attempt::Fatal(Error::protocol(format!("HTTP {status}"), &text))),
    }
}

/// Pull and check the `items` array of a response envelope.
fn response_items(text: &str, expected: usize) -> std::result::Result<Vec<Value>, Attempt> {
    let fatal = |msg: String| Attempt::Fatal(Error::protocol(msg, text));
    let doc: Value = serde_json::from_str(text).map_err(|e| fatal(format!("invalid JSON: {e}")))?;
    if let Some(version) = doc.get("version") {
        if version.as_str() != Some(PROTOCOL_VERSION) {
            return Err(fatal(format!("unsupported protocol version {version}")));
        }
    }
    let items = doc
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| fatal("response has no \"items\" array".into()))?;
    if items.len() != expected {
        return Err(fatal(format!(
            "expected {expected} item(s), got {}",
            items.len()
        )));
    }
    let errors = items.iter().filter(|i| i.get("error").is_some()).count();
    if errors > 0 {
        return Err(Attempt::Retry(format!("{errors} item-level error(s)")));
    }
    Ok(items.clone())
}

fn item_prediction(item: &Value, raw: &str) -> std::result::Result<(SentimentLabel, f64), Attempt> {
    let fatal = |msg: String| Attempt::Fatal(Error::protocol(msg, raw));
    let label = item
        .get("label")
        .and_then(Value::as_str)
        .ok_or_else(|| fatal("item without string \"label\"".into()))?;
    let label = SentimentLabel::parse(label).ok_or_else(|| fatal(format!("unknown label {label:?}")))?;
    let confidence = item
        .get("confidence")
        .and_then(Value::as_f64)
        .filter(|c| (0.0..=1.0).contains(c))
        .ok_or_else(|| fatal("item confidence missing or outside [0,1]".into()))?;
    Ok((label, confidence))
}

fn check_id(item: &Value, expected: &str, raw: &str) -> std::result::Result<(), Attempt> {
    match item.get("id").and_then(Value::as_str) {
        Some(id) if id == expected => Ok(()),
        other => Err(Attempt::Fatal(Error::protocol(
            format!("item id {other:?} does not echo request id {expected:?}"),
            raw,
        ))),
    }
}

fn with_retries<T>(
    endpoint: &ModelEndpoint,
    mut attempt: impl FnMut() -> std::result::Result<T, Attempt>,
) -> Result<T> {
    let mut last = String::new();
    for n in 0..=endpoint.max_retries {
        if n > 0 {
            let delay = endpoint.backoff_ms.saturating_mul(1 << (n - 1).min(16));
            std::thread::sleep(Duration::from_millis(delay));
        }
        match attempt() {
            Ok(v) => return Ok(v),
            Err(Attempt::Fatal(e)) => return Err(e),
            Err(Attempt::Retry(msg)) => {
                log::warn!("attempt {} of {} failed: {msg}", n + 1, endpoint.max_retries + 1);
                last = msg;
            }
        }
    }
    Err(Error::Transport {
        attempts: endpoint.max_retries + 1,
        message: last,
    })
}

/// Label one batch through `POST {base}/v1/sentiment`.
///
/// Output index `i` corresponds to input index `i`. Transport failures and
/// item-level errors retry the whole batch with exponential backoff; contract
/// violations fail at once with [`Error::Protocol`]. An empty batch makes no
/// request.
pub fn fetch_sentiment(endpoint: &ModelEndpoint, batch: &[SentimentItem]) -> Result<Vec<ModelLabelRecord>> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let body = json!({ "items": batch });
    with_retries(endpoint, || {
        let raw = post(endpoint, "v1/sentiment", &body)?;
        let items = response_items(&raw, batch.len())?;
        batch
            .iter()
            .zip(&items)
            .map(|(req, item)| {
                check_id(item, &req.id, &raw)?;
                let (label, confidence) = item_prediction(item, &raw)?;
                Ok(ModelLabelRecord {
                    review_id: req.id.clone(),
                    label,
                    confidence,
                    model_id: endpoint.model_id.clone(),
                })
            })
            .collect()
    })
}

/// Score one batch of (review, aspect) pairs through `POST {base}/v1/absa`.
/// Each response item must echo both the id and the aspect.
pub fn fetch_absa(endpoint: &ModelEndpoint, batch: &[AbsaItem]) -> Result<Vec<AspectPolarityRecord>> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let body = json!({ "items": batch });
    with_retries(endpoint, || {
        let raw = post(endpoint, "v1/absa", &body)?;
        let items = response_items(&raw, batch.len())?;
        batch
            .iter()
            .zip(&items)
            .map(|(req, item)| {
                check_id(item, &req.id, &raw)?;
                let echoed = item.get("aspect").and_then(Value::as_str);
                if echoed != Some(req.aspect.as_str()) {
                    return Err(Attempt::Fatal(Error::protocol(
                        format!("aspect echo {echoed:?} does not match {:?}", req.aspect.as_str()),
                        &raw,
                    )));
                }
                let (polarity, confidence) = item_prediction(item, &raw)?;
                Ok(AspectPolarityRecord {
                    review_id: req.id.clone(),
                    aspect: req.aspect,
                    polarity,
                    confidence,
                })
            })
            .collect()
    })
}

/// `GET {base}/healthz`.
pub fn health(endpoint: &ModelEndpoint) -> Result<Health> {
    with_retries(endpoint, || {
        let mut resp = endpoint
            .agent()
            .get(&endpoint.url("healthz"))
            .call()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(Attempt::Retry(format!("HTTP {}", resp.status().as_u16())));
        }
        serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(Error::protocol(format!("invalid health response: {e}"), &text)))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub batch: usize,
    pub ids: Vec<String>,
    pub error: String,
}

/// Records from all batches that succeeded, in input order, plus the batches
/// that exhausted their retries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batched<T> {
    pub records: Vec<T>,
    pub failures: Vec<BatchFailure>,
}

fn run_batches<I, T, F>(endpoint: &ModelEndpoint, items: &[I], id: impl Fn(&I) -> &str, fetch: F) -> Result<Batched<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&ModelEndpoint, &[I]) -> Result<Vec<T>> + Sync,
{
    endpoint.validate()?;
    let batches: Vec<&[I]> = items.chunks(endpoint.batch_size).collect();
    let mut results: Vec<Option<Result<Vec<T>>>> = Vec::with_capacity(batches.len());
    for group in batches.chunks(endpoint.parallelism) {
        let fetch = &fetch;
        let group_results: Vec<Result<Vec<T>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = group
                .iter()
                .map(|batch| scope.spawn(move || fetch(endpoint, batch)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("batch worker panicked"))
                .collect()
        });
        results.extend(group_results.into_iter().map(Some));
    }

    let mut out = Batched {
        records: Vec::with_capacity(items.len()),
        failures: Vec::new(),
    };
    for (idx, (batch, result)) in batches.iter().zip(results).enumerate() {
        match result.expect("every batch ran") {
            Ok(records) => out.records.extend(records),
            Err(e @ Error::Transport { .. }) => out.failures.push(BatchFailure {
                batch: idx,
                ids: batch.iter().map(|i| id(i).to_string()).collect(),
                error: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Label every item, batch by batch, with bounded parallelism. Batches that
/// keep failing are recorded and skipped; protocol errors abort.
pub fn fetch_sentiment_all(endpoint: &ModelEndpoint, items: &[SentimentItem]) -> Result<Batched<ModelLabelRecord>> {
    run_batches(endpoint, items, |i| &i.id, fetch_sentiment)
}

pub fn fetch_absa_all(endpoint: &ModelEndpoint, items: &[AbsaItem]) -> Result<Batched<AspectPolarityRecord>> {
    run_batches(endpoint, items, |i| &i.id, fetch_absa)
}
