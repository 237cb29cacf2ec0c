//! `manifest.json`: one per output directory, one entry per command run in it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entry {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: Config,
    /// sha256 of every file read.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of every file written.
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock seconds per phase. Kept here so outputs stay reproducible.
    pub wall_s: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct File {
    tool: String,
    runs: BTreeMap<String, Entry>,
}

pub struct Manifest {
    entry: Entry,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(command: &str, args: &[String], cfg: &Config) -> Self {
        Manifest {
            entry: Entry {
                command: command.into(),
                args: args.to_vec(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed: cfg.seed,
                threads: cfg.threads,
                config: cfg.clone(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                wall_s: BTreeMap::new(),
            },
        }
    }

    pub fn input(&mut self, p: &Path, bytes: &[u8]) {
        self.entry.inputs.insert(p.display().to_string(), sha256_hex(bytes));
    }

    pub fn output(&mut self, p: &Path, bytes: &[u8]) {
        self.entry.outputs.insert(p.display().to_string(), sha256_hex(bytes));
    }

    pub fn phase(&mut self, name: &str, secs: f64) {
        self.entry.wall_s.insert(name.into(), secs);
    }

    /// Merge into the directory's manifest, replacing an earlier run of the
    /// same command.
    pub fn save(self, dir: &Path) -> Result<(), Failure> {
        let path = dir.join("manifest.json");
        let mut file = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<File>(&t).ok())
            .unwrap_or_default();
        file.tool = format!("cslp {}", env!("CARGO_PKG_VERSION"));
        file.runs.insert(self.entry.command.clone(), self.entry);
        let text = serde_json::to_string_pretty(&file).expect("manifest serialises") + "\n";
        std::fs::write(&path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
    }
}
