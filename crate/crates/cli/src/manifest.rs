use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command: argv, resolved configuration,
/// seeds, inputs and produced artifacts.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub status: String,
    pub timestamp_unix: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: std::env::args().collect(),
            config: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            status: "ok".into(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_config(mut self, pairs: Vec<(String, String)>) -> Self {
        self.config.extend(pairs);
        self
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
