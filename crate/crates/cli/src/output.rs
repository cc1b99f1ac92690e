//! Output files: CSV tables and their JSON sidecars, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("output path {} has no file name", path.display()))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("cannot move output into {}", path.display()))
}

/// CSV with a header and serde rows; `footer` lines are appended as `# ...`.
pub fn csv_bytes<R: Serialize>(header: &[&str], rows: &[R], footer: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let mut bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    for line in footer {
        bytes.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    Ok(bytes)
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Sidecar contents shared by every command.
pub struct Sidecar<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub grid: Value,
    pub summary: Value,
    pub timing_seconds: Option<f64>,
}

impl Sidecar<'_> {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let units = self.config.units();
        let mut v = serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "units": { "field": units.field_unit(), "energy": units.energy_unit() },
            "grid": self.grid,
            "summary": self.summary,
        });
        if let Some(t) = self.timing_seconds {
            v["timing_seconds"] = serde_json::json!(t);
        }
        let mut bytes = serde_json::to_vec_pretty(&v)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

/// Writes the CSV and its sidecar.
pub fn write_outputs(csv_path: &Path, csv: &[u8], sidecar: &Sidecar) -> Result<()> {
    write_atomic(csv_path, csv)?;
    write_atomic(&sidecar_path(csv_path), &sidecar.to_json()?)
}
