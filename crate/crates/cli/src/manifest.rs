use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }
}

/// Peak fidelity in each Rabi period of one curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub label: String,
    pub peaks: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Passed,
    ChecksFailed,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub duration_seconds: f64,
    pub parallel: bool,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    pub peaks: Vec<PeakRecord>,
    pub values: BTreeMap<String, f64>,
    /// Resolved configuration; absent when the config itself failed to load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

impl RunManifest {
    pub fn new(config: Option<RunConfig>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            status: Status::Error,
            error: None,
            duration_seconds: 0.0,
            parallel: magnoconv::parallel::is_parallel(),
            files: Vec::new(),
            checks: Vec::new(),
            peaks: Vec::new(),
            values: BTreeMap::new(),
            config,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).context("manifest serialization")?;
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(toml::from_str(&text)?)
    }
}
