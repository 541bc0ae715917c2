//! Artifact writers. Every file carries the output schema version.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Pretty JSON with `schema_version` and `command` at the top level.
    pub fn json<T: Serialize>(&self, name: &str, command: &str, value: &T) -> Result<()> {
        let body = serde_json::to_value(value)?;
        let mut doc = json!({ "schema_version": OUTPUT_SCHEMA_VERSION, "command": command });
        match body {
            Value::Object(map) => doc.as_object_mut().unwrap().extend(map),
            other => {
                doc["data"] = other;
            }
        }
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        fs::write(self.path(name), text).with_context(|| format!("writing {name}"))
    }

    /// CSV whose first column is the schema version.
    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name)).with_context(|| format!("writing {name}"))?;
        let mut head = vec!["schema_version".to_string()];
        head.extend(header.iter().cloned());
        w.write_record(&head)?;
        let version = OUTPUT_SCHEMA_VERSION.to_string();
        for row in rows {
            let mut rec = vec![version.clone()];
            rec.extend(row.iter().map(|x| format!("{x:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn config(&self, cfg: &RunConfig) -> Result<()> {
        let text = serde_json::to_string_pretty(cfg)? + "\n";
        fs::write(self.path("config.json"), text).context("writing config.json")
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        fs::write(self.path(name), body).with_context(|| format!("writing {name}"))
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
