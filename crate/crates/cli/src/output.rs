//! CSV writing and the run manifest that accompanies every CSV file.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(())
}

/// Stable SHA-256 of a configuration's JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configuration serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub cohest: &'static str,
    pub cohest_core: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: Vec<String>,
    pub config: C,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(config: C, seed: Option<u64>, started: SystemTime, elapsed: Duration) -> Self {
        Self {
            command: std::env::args().collect(),
            config_hash: config_hash(&config),
            config,
            seed,
            versions: Versions { cohest: env!("CARGO_PKG_VERSION"), cohest_core: cohest_core::VERSION },
            started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_seconds: elapsed.as_secs_f64(),
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    /// Writes `<csv>.manifest.json` next to `csv`, listing `csv` as its output.
    pub fn write_for(mut self, csv: &Path) -> Result<PathBuf> {
        self.outputs = vec![csv.to_path_buf()];
        let path = manifest_path(csv);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

/// `results/bench.csv` -> `results/bench_summary.csv`.
pub fn sibling_path(csv: &Path, suffix: &str) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = csv.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    csv.with_file_name(format!("{stem}_{suffix}.{ext}"))
}
