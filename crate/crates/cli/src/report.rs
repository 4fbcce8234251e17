//! Deterministic file outputs: CSV tables at full precision, JSON summaries,
//! and the per-run metadata file (the only place timestamps appear).

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// 17 significant digits: lossless for f64, stable across runs.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvWriter {
    path: PathBuf,
    body: String,
}

impl CsvWriter {
    pub fn new(dir: &Path, name: &str, header: &[&str]) -> Self {
        Self {
            path: dir.join(name),
            body: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.body.push_str(&fields.join(","));
        self.body.push('\n');
    }

    pub fn finish(self) -> Result<PathBuf> {
        std::fs::write(&self.path, self.body)
            .with_context(|| format!("writing {}", self.path.display()))?;
        Ok(self.path)
    }
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub struct RunMetadata<'a> {
    pub command: &'a str,
    pub config_raw: &'a str,
    pub seed: u64,
    pub workers: usize,
    pub tolerance_scale: f64,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
    pub passed: bool,
}

pub fn write_metadata(dir: &Path, meta: &RunMetadata<'_>) -> Result<PathBuf> {
    let mut hasher = Sha256::new();
    hasher.update(meta.config_raw.as_bytes());
    let digest = hasher.finalize();
    let config_sha256: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    write_json(
        dir,
        "metadata.json",
        &serde_json::json!({
            "tool": "udw",
            "version": env!("CARGO_PKG_VERSION"),
            "command": meta.command,
            "config_sha256": config_sha256,
            "seed": meta.seed,
            "workers": meta.workers,
            "tolerance_scale": meta.tolerance_scale,
            "wall_time_seconds": meta.wall_time.as_secs_f64(),
            "warnings": meta.warnings,
            "passed": meta.passed,
        }),
    )
}
