//! Run manifests: every command writes `run.json` next to its outputs with
//! the fully resolved parameters, seed, and input digests, so any run can be
//! re-executed bit-exactly from its recorded argv.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// Arguments that reproduce this run, including the resolved seed.
    pub argv: Vec<String>,
    /// Fully resolved parameter values after defaults.
    pub params: serde_json::Value,
    /// Absent for deterministic commands that consume no randomness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, params: serde_json::Value) -> Self {
        Self {
            tool: "jumpdiff",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            argv: resolved_argv(seed),
            params,
            seed,
            input_digests: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        self.input_digests
            .insert(path.display().to_string(), format!("sha256:{digest:x}"));
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(out_dir.join("run.json"), body)
    }
}

/// The invocation argv with the seed pinned: if `--seed` was omitted and one
/// was auto-generated, it is appended so a re-run reproduces the outputs.
fn resolved_argv(seed: Option<u64>) -> Vec<String> {
    let mut argv: Vec<String> = std::env::args().skip(1).collect();
    if let Some(seed) = seed {
        if !argv.iter().any(|a| a == "--seed" || a.starts_with("--seed=")) {
            argv.push("--seed".to_string());
            argv.push(seed.to_string());
        }
    }
    argv
}
