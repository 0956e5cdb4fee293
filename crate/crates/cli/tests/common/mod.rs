#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Output;

use serde_json::Value;

/// Small grids so CLI tests train in seconds.
pub const FAST_CONFIG: &str = r#"{
  "grids": {
    "nb_alpha": [1.0],
    "lr_lambda": [0.001],
    "svm_lambda": [0.001],
    "svm_epochs": [10],
    "rf_n_trees": [20],
    "rf_max_depth": [16]
  },
  "bootstrap_resamples": 200
}"#;

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    pub fn run_dir(&self, name: &str) -> PathBuf {
        self.path("runs").join(name)
    }

    /// Runs the binary with `--out <tmp>/runs` inside the workspace.
    pub fn revsent(&self, args: &[&str]) -> Output {
        std::process::Command::new(env!("CARGO_BIN_EXE_revsent"))
            .current_dir(self.dir.path())
            .arg("--out")
            .arg("runs")
            .args(args)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

/// Relative path -> bytes for every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Drop the `config` member from report envelopes; it names the label source.
pub fn without_config_echo(files: BTreeMap<String, Vec<u8>>) -> BTreeMap<String, Vec<u8>> {
    files
        .into_iter()
        .map(|(name, bytes)| {
            if name.ends_with(".json") {
                let mut v: Value = serde_json::from_slice(&bytes).unwrap();
                if let Some(obj) = v.as_object_mut().filter(|o| o.contains_key("report")) {
                    obj.remove("config");
                }
                (name, serde_json::to_vec_pretty(&v).unwrap())
            } else {
                (name, bytes)
            }
        })
        .collect()
}

/// Names of files whose bytes differ or that exist on one side only.
pub fn differing(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut names: Vec<&String> = a.keys().chain(b.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| a.get(*n) != b.get(*n))
        .cloned()
        .collect()
}
