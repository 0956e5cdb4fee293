use std::path::{Path, PathBuf};

use revsent::config::RunConfig;
use revsent::report::{envelope, write_json, write_text, Table};
use revsent::{Error, Result};
use serde::Serialize;

/// Effective config plus the directory a stage writes into.
pub struct RunContext {
    pub config: RunConfig,
    pub dir: PathBuf,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl RunContext {
    /// Create (or reuse) `out_dir/<name>`.
    pub fn open(config: RunConfig, name: Option<&str>) -> Result<Self> {
        let name = match name {
            Some(n) => n.to_string(),
            None => format!(
                "{}-seed{}",
                chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
                config.seed
            ),
        };
        let dir = config.out_dir.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        log::info!("run directory {}", dir.display());
        Ok(Self { config, dir })
    }

    pub fn existing(config: RunConfig, dir: PathBuf) -> Result<Self> {
        if !dir.is_dir() {
            return Err(io_err(
                &dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "run directory not found"),
            ));
        }
        Ok(Self { config, dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Explicit path, or `name` inside the run directory.
    pub fn input(&self, given: Option<PathBuf>, name: &str) -> PathBuf {
        given.unwrap_or_else(|| self.path(name))
    }

    /// `<stem>.json` with the config echo.
    pub fn write_report<T: Serialize>(&self, stem: &str, report: &T) -> Result<()> {
        write_json(&self.path(&format!("{stem}.json")), &envelope(&self.config, report))
    }

    pub fn write_tables(&self, stem: &str, tables: &[Table], notes: &[String]) -> Result<()> {
        let mut text = String::new();
        for (i, t) in tables.iter().enumerate() {
            if i > 0 {
                text.push('\n');
            }
            text.push_str(&t.render());
        }
        if !notes.is_empty() {
            if !text.is_empty() {
                text.push('\n');
            }
            for note in notes {
                text.push_str(&format!("! {note}\n"));
            }
        }
        write_text(&self.path(&format!("{stem}.txt")), &text)
    }

    pub fn write_csv(&self, stem: &str, table: &Table) -> Result<()> {
        write_text(&self.path(&format!("{stem}.csv")), &table.to_csv())
    }

    /// Rejected records fail the stage under `strict`.
    pub fn check_rejects(&self, what: &str, count: usize) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if self.config.strict {
            return Err(Error::Validation(format!("{count} rejected {what} (strict mode)")));
        }
        log::warn!("skipped {count} rejected {what}");
        Ok(())
    }
}

pub fn labels_table(title: &str) -> Table {
    Table::new(title, &["", "negative", "neutral", "positive", "total"])
}

pub fn count_row(name: &str, counts: [usize; 3]) -> Vec<String> {
    let mut row = vec![name.to_string()];
    row.extend(counts.iter().map(|c| c.to_string()));
    row.push(counts.iter().sum::<usize>().to_string());
    row
}
