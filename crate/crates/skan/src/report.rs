//! Run artifacts: CSV tables, JSON reports, and the manifest that makes a
//! run reproducible.

use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// Everything needed to rerun a command bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Fully resolved configuration after defaults, file and flags.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// (path, sha256) of every input file consumed.
    pub input_checksums: Vec<(String, String)>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub outputs: Vec<String>,
}

/// Wall clock, unless `SOURCE_DATE_EPOCH` pins it for reproducible output.
pub fn now() -> DateTime<Utc> {
    match std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok())
    {
        Some(secs) => Utc.timestamp_opt(secs, 0).single().unwrap_or_else(Utc::now),
        None => Utc::now(),
    }
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seeds,
            input_checksums: Vec::new(),
            started: now(),
            finished: now(),
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self, outputs: Vec<PathBuf>) {
        self.finished = now();
        self.outputs = outputs
            .into_iter()
            .map(|p| p.display().to_string())
            .collect();
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Pretty JSON with a trailing newline; serde_json key order is stable for
/// structs, so identical values give identical bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    std::fs::write(path, body).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}

/// One CSV file of serializable rows.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_date_epoch_pins_time() {
        std::env::set_var("SOURCE_DATE_EPOCH", "1700000000");
        let t = now();
        std::env::remove_var("SOURCE_DATE_EPOCH");
        assert_eq!(t.timestamp(), 1_700_000_000);
    }
}
