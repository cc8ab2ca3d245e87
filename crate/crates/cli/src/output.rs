//! Run directories and provenance embedding.
//!
//! Every command writes under `<output_dir>/<command>-<timestamp>/`, and
//! every JSON output embeds the fully resolved configuration; text outputs
//! get a sibling `config.json`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Utc;
use serde::Serialize;

/// A freshly created output directory for one command invocation.
pub struct RunDir {
    path: PathBuf,
    provenance: serde_json::Value,
}

impl RunDir {
    /// Creates `<base>/<command>-<timestamp>/` (with a numeric suffix when
    /// two runs land on the same second) and pins the resolved provenance.
    pub fn create<C: Serialize>(base: &Path, command: &str, resolved: &C) -> Result<Self> {
        let stamp = Utc::now().format("%Y%m%dT%H%M%SZ");
        let mut path = base.join(format!("{command}-{stamp}"));
        let mut suffix = 1;
        while path.exists() {
            suffix += 1;
            path = base.join(format!("{command}-{stamp}-{suffix}"));
        }
        std::fs::create_dir_all(&path)
            .with_context(|| format!("cannot create output dir {}", path.display()))?;
        let provenance = serde_json::json!({
            "command": command,
            "created": stamp.to_string(),
            "config": serde_json::to_value(resolved)?,
        });
        std::fs::write(
            path.join("config.json"),
            serde_json::to_string_pretty(&provenance)?,
        )?;
        Ok(RunDir { path, provenance })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes `{ "provenance": ..., <payload fields> }` as pretty JSON.
    pub fn write_json<P: Serialize>(&self, name: &str, payload: &P) -> Result<PathBuf> {
        let mut value = serde_json::to_value(payload)?;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("provenance".to_string(), self.provenance.clone());
        } else {
            value = serde_json::json!({
                "provenance": self.provenance,
                "data": value,
            });
        }
        let path = self.path.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(&value)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    /// Writes a text file with a one-line pointer to the sibling config.
    pub fn write_text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.path.join(name);
        let content = format!("# provenance: see config.json in this directory\n{body}");
        std::fs::write(&path, content)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    /// Writes a CSV file; provenance lives in the sibling config.json.
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let path = self.path.join(name);
        let mut content = String::from(header);
        content.push('\n');
        for row in rows {
            content.push_str(row);
            content.push('\n');
        }
        std::fs::write(&path, content)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Escapes one CSV field.
pub fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}
