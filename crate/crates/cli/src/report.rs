//! Markdown report assembled from earlier `summary.json` files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use crate::commands::Exit;
use crate::output::Outputs;

/// Collects `summary.json` from `dir` and its immediate subdirectories.
pub fn report(dir: &Path, out: &Outputs) -> Result<Exit> {
    let mut found = Vec::new();
    let mut candidates = vec![dir.to_path_buf()];
    let mut subdirs: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    candidates.extend(subdirs);
    for d in candidates {
        let path = d.join("summary.json");
        if path.is_file() {
            let text = fs::read_to_string(&path)?;
            let value: Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            found.push((d, value));
        }
    }
    if found.is_empty() {
        bail!("no summary.json under {}", dir.display());
    }
    let mut md = String::from("# Run report\n\n");
    for (d, v) in &found {
        let command = v.get("command").and_then(Value::as_str).unwrap_or("unknown");
        md.push_str(&format!("## {command} ({})\n\n", d.display()));
        if let Some(checks) = v.get("checks").and_then(Value::as_array) {
            md.push_str("| # | check | status | measured | expected |\n|---|---|---|---|---|\n");
            for c in checks {
                let f = |k: &str| c.get(k).map(plain).unwrap_or_default();
                md.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    f("criterion"),
                    f("name"),
                    f("status"),
                    f("measured"),
                    f("expected")
                ));
            }
        } else if let Some(map) = v.as_object() {
            md.push_str("| key | value |\n|---|---|\n");
            for (k, val) in map {
                if k == "schema_version" || k == "command" {
                    continue;
                }
                md.push_str(&format!("| {k} | {} |\n", plain(val)));
            }
        }
        md.push('\n');
    }
    out.text("report.md", &md)?;
    println!("{} summaries rendered to {}", found.len(), out.path("report.md").display());
    Ok(Exit::Success)
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string().replace('|', "\\|"),
    }
}
