use revsent::report::{envelope, write_json, write_text};
use revsent::{Error, Result};
use serde_json::{Map, Value};

use crate::run::RunContext;

/// Stage reports in pipeline order.
const SECTIONS: [&str; 7] = ["stats", "labeling", "evaluation", "grid", "ranking", "aspects", "trends"];

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn run(ctx: &RunContext) -> Result<()> {
    let mut sections = Map::new();
    let mut text = String::new();
    for name in SECTIONS {
        let json = ctx.path(&format!("{name}.json"));
        if !json.exists() {
            continue;
        }
        let doc: Value = serde_json::from_str(&read(&json)?).map_err(|e| Error::Format {
            path: json.clone(),
            message: e.to_string(),
        })?;
        sections.insert(name.to_string(), doc.get("report").cloned().unwrap_or(Value::Null));
        let txt = ctx.path(&format!("{name}.txt"));
        if txt.exists() {
            if !text.is_empty() {
                text.push('\n');
            }
            text.push_str(&format!("== {name} ==\n"));
            text.push_str(&read(&txt)?);
        }
    }
    if sections.is_empty() {
        return Err(Error::Validation(format!(
            "no stage reports found in {}",
            ctx.dir.display()
        )));
    }
    write_json(&ctx.path("report.json"), &envelope(&ctx.config, &sections))?;
    write_text(&ctx.path("report.txt"), &text)?;
    log::info!("report: {} section(s)", sections.len());
    Ok(())
}
