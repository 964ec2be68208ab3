use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use urbanemf::RunConfig;

/// Output directory that records what was written and how long each stage
/// took, for the run manifest.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    config: RunConfig,
    timings: BTreeMap<String, f64>,
    outputs: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    status: &'a str,
    error: Option<String>,
    config: &'a RunConfig,
    seeds: Seeds,
    timings_s: &'a BTreeMap<String, f64>,
    outputs: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Seeds {
    master: Option<u64>,
    launch: u64,
    mobility: u64,
    mc: u64,
    nm: u64,
    baseline: u64,
}

impl Run {
    pub fn new(dir: PathBuf, command: &str, config: &RunConfig) -> Run {
        Run {
            dir,
            command: command.to_string(),
            config: config.clone(),
            timings: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Time a stage.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(name.to_string(), t.elapsed().as_secs_f64());
        out
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.write(name, &bytes)
    }

    /// Write `manifest.json`; called on success and on failure.
    pub fn finish(&self, error: Option<&anyhow::Error>) -> Result<()> {
        let c = &self.config;
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            status: if error.is_some() { "error" } else { "ok" },
            error: error.map(|e| format!("{e:#}")),
            config: c,
            seeds: Seeds {
                master: c.seed,
                launch: c.launch.seed,
                mobility: c.mobility.seed,
                mc: c.mc.seed,
                nm: c.nm.seed,
                baseline: c.baseline.seed,
            },
            timings_s: &self.timings,
            outputs: &self.outputs,
        };
        std::fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string_pretty(&m)? + "\n";
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

