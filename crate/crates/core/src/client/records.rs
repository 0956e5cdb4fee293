use std::io::{BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analytics::{Aspect, AspectPolarityRecord};
use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;

/// One external prediction for one review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLabelRecord {
    pub review_id: String,
    pub label: SentimentLabel,
    pub confidence: f64,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReject {
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelFile<T> {
    pub records: Vec<T>,
    pub rejects: Vec<LabelReject>,
}

/// Model id given to label-file records that do not name one.
pub const DEFAULT_MODEL_ID: &str = "external";

fn field_str<'a>(v: &'a Value, key: &str) -> std::result::Result<&'a str, String> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("missing or non-string field {key:?}"))
}

fn field_label(v: &Value, key: &str) -> std::result::Result<SentimentLabel, String> {
    let s = field_str(v, key)?;
    SentimentLabel::parse(s).ok_or_else(|| format!("label {s:?} not one of negative/neutral/positive"))
}

fn field_confidence(v: &Value) -> std::result::Result<f64, String> {
    let c = v
        .get("confidence")
        .and_then(Value::as_f64)
        .ok_or("missing or non-numeric field \"confidence\"")?;
    if !(0.0..=1.0).contains(&c) {
        return Err("confidence out of range".into());
    }
    Ok(c)
}

fn read_records<T>(
    path: &Path,
    parse: impl Fn(&Value) -> std::result::Result<T, String>,
) -> Result<LabelFile<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = LabelFile {
        records: Vec::new(),
        rejects: Vec::new(),
    };
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let reject = |id: Option<String>, reason: String| LabelReject {
            line: idx + 1,
            id,
            reason,
        };
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                out.rejects.push(reject(None, format!("malformed record: {e}")));
                continue;
            }
        };
        match parse(&value) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => {
                let id = value.get("review_id").and_then(Value::as_str).map(str::to_string);
                out.rejects.push(reject(id, reason));
            }
        }
    }
    Ok(out)
}

/// Read `{review_id, label, confidence, model_id?}` lines.
pub fn read_label_file(path: &Path) -> Result<LabelFile<ModelLabelRecord>> {
    read_records(path, |v| {
        Ok(ModelLabelRecord {
            review_id: field_str(v, "review_id")?.to_string(),
            label: field_label(v, "label")?,
            confidence: field_confidence(v)?,
            model_id: v
                .get("model_id")
                .and_then(Value::as_str)
                .unwrap_or(DEFAULT_MODEL_ID)
                .to_string(),
        })
    })
}

/// Read `{review_id, aspect, polarity, confidence}` lines.
pub fn read_absa_file(path: &Path) -> Result<LabelFile<AspectPolarityRecord>> {
    read_records(path, |v| {
        let aspect = field_str(v, "aspect")?;
        Ok(AspectPolarityRecord {
            review_id: field_str(v, "review_id")?.to_string(),
            aspect: Aspect::parse(aspect).ok_or_else(|| format!("unknown aspect {aspect:?}"))?,
            polarity: field_label(v, "polarity")?,
            confidence: field_confidence(v)?,
        })
    })
}

/// Read a file written by [`write_jsonl`]. Any bad line fails the whole read.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", idx + 1),
        })?);
    }
    Ok(out)
}

/// Write one compact JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).expect("records serialize");
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
