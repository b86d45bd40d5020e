//! Run configuration: model keys at the top level, optional `[plan]` and
//! `[potential]` tables.

use anyhow::{Context, Result};
use ruelle_bands::birkhoff::SamplingPlan;
use ruelle_bands::model::ModelConfig;
use ruelle_bands::potential::PotentialSpec;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub plan: SamplingPlan,
    pub potential: PotentialSpec,
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(ruelle_bands::error::Error::from)?;
        let plan = match table.remove("plan") {
            Some(v) => v.try_into().map_err(ruelle_bands::error::Error::from)?,
            None => SamplingPlan::default(),
        };
        let potential = match table.remove("potential") {
            Some(v) => v.try_into().map_err(ruelle_bands::error::Error::from)?,
            None => PotentialSpec::default(),
        };
        let model: ModelConfig = toml::Value::Table(table).try_into().map_err(ruelle_bands::error::Error::from)?;
        Ok(RunConfig { model, plan, potential, source: None })
    }

    /// SHA-256 of the effective configuration (defaults included).
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("configuration serialises").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}
