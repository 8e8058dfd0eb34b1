//! Run artifacts: one directory per invocation holding plain CSV tables
//! and a JSON manifest describing how they were produced.
//!
//! The directory name is a content hash of the command, its resolved
//! request, the config bytes, and the seed, so rerunning an identical
//! invocation lands on the same files and must reproduce every CSV byte
//! for byte. Timestamps live only in the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip decimal form; the payload-determinism contract
/// rides on this being a pure function of the bits.
pub fn fnum(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn io_err(what: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{what} '{}': {e}", path.display()))
}

/// Artifact collector for one command invocation.
pub struct RunDir {
    pub dir: PathBuf,
    manifest: Map<String, Value>,
    outputs: Vec<Value>,
}

impl RunDir {
    pub fn create(
        out_dir: &Path,
        command: &str,
        request: &Value,
        config_path: Option<&Path>,
        config_bytes: &[u8],
        seed: u64,
    ) -> Result<Self, CliError> {
        let config_sha = sha256_hex(config_bytes);
        let identity = format!("{command}\x1f{request}\x1f{config_sha}\x1f{seed}");
        let run_id = sha256_hex(identity.as_bytes())[..12].to_string();
        let dir = out_dir.join(format!("{command}-{run_id}"));
        fs::create_dir_all(&dir).map_err(|e| io_err("cannot create run directory", &dir, e))?;

        let mut manifest = Map::new();
        manifest.insert("command".into(), json!(command));
        manifest.insert("run_id".into(), json!(run_id));
        manifest.insert(
            "config_path".into(),
            json!(config_path.map(|p| p.display().to_string())),
        );
        manifest.insert("config_sha256".into(), json!(config_sha));
        manifest.insert("seed".into(), json!(seed));
        manifest.insert("request".into(), request.clone());
        manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        manifest.insert("started_unix".into(), json!(unix_now()));
        Ok(RunDir {
            dir,
            manifest,
            outputs: Vec::new(),
        })
    }

    /// Command-specific block: seeds, ensemble sizes, tolerances, grids.
    pub fn set_metadata(&mut self, value: Value) {
        self.manifest.insert("metadata".into(), value);
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err("cannot write", &path, e))?;
        self.outputs.push(json!({
            "file": name,
            "sha256": sha256_hex(bytes),
            "bytes": bytes.len(),
        }));
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)
            .and_then(|()| rows.iter().try_for_each(|r| w.write_record(r)))
            .map_err(|e| CliError::Runtime(format!("csv encoding failed for {name}: {e}")))?;
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Runtime(format!("csv flush failed for {name}: {e}")))?;
        self.record(name, &bytes)
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Runtime(format!("json encoding failed for {name}: {e}")))?;
        bytes.push(b'\n');
        self.record(name, &bytes)
    }

    /// Write the manifest and return the run directory.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest.insert("outputs".into(), Value::Array(self.outputs.clone()));
        self.manifest.insert("finished_unix".into(), json!(unix_now()));
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(self.manifest.clone()))
            .map_err(|e| CliError::Runtime(format!("manifest encoding failed: {e}")))?;
        bytes.push(b'\n');
        fs::write(&path, &bytes).map_err(|e| io_err("cannot write", &path, e))?;
        Ok(self.dir)
    }
}
