use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tgpd_core::nn::write_atomic;

use crate::config::ExperimentConfig;
use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one finished run. `config` alone is enough to repeat it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub versions: BTreeMap<String, String>,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    /// Output name → path.
    pub outputs: BTreeMap<String, PathBuf>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub path: PathBuf,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn new(config: ExperimentConfig) -> Self {
        let versions = [
            ("tgpd-cli", env!("CARGO_PKG_VERSION")),
            ("tgpd-core", tgpd_core::VERSION),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect();
        Self {
            config,
            versions,
            started: now(),
            finished: 0.0,
            outputs: BTreeMap::new(),
            metrics: BTreeMap::new(),
            path: PathBuf::new(),
        }
    }

    /// Stamp the finish time and write `manifest.json` into `dir` atomically.
    pub fn finish(mut self, dir: &Path) -> Result<Self, Failure> {
        self.finished = now();
        self.path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).map_err(|e| Failure::Runtime(e.to_string()))?;
        write_atomic(&self.path, text.as_bytes()).map_err(|e| Failure::Runtime(format!("{}: {e}", self.path.display())))?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        let mut m: Self =
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("manifest {}: {e}", path.display())))?;
        m.path = path.to_owned();
        Ok(m)
    }
}
