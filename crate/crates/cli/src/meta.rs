//! Metadata sidecars written next to every output file.

use crate::config::{sha256_hex, RunConfig};
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_path: Option<String>,
    pub config_sha256: String,
    pub config: Value,
    pub parameters: Value,
    /// SHA-256 of every input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub results: Value,
    /// Surface area, for spectrum files (read back by the spectrum loader).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
}

impl Meta {
    pub fn new(command: &str, seed: u64, cfg: &RunConfig, parameters: Value) -> Self {
        Meta {
            tool: "ruelle",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config_path: cfg.source.as_ref().map(|p| p.display().to_string()),
            config_sha256: cfg.digest(),
            config: serde_json::to_value(cfg).expect("configuration serialises"),
            parameters,
            inputs: BTreeMap::new(),
            results: Value::Null,
            area: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

/// Writes `bytes` to `out` (standard output when `None`) and, for files, the
/// sidecar `<out>.meta.json`.
pub fn emit(out: Option<&Path>, bytes: &[u8], meta: &Meta) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            write_meta(path, meta)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn write_meta(path: &Path, meta: &Meta) -> Result<()> {
    let side: PathBuf = ruelle_bands::io::sidecar_path(path);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    std::fs::write(&side, text).with_context(|| format!("writing {}", side.display()))?;
    Ok(())
}
