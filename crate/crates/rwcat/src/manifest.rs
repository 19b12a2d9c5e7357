//! Run directories and their manifests.
//!
//! A run directory holds `manifest.json`, the exact inputs under `inputs/`
//! and everything produced under `results/`. Directories are never reused.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "rwcat";
pub const MANIFEST: &str = "manifest.json";

pub fn sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand and its arguments, without global flags.
    pub command: Vec<String>,
    /// `--seed` as given, if any.
    pub seed: Option<u64>,
    /// Seeds in force after overrides.
    pub seeds: BTreeMap<String, u64>,
    /// Effective configuration; file entries point into `inputs/`.
    pub config: String,
    /// sha256 of each file under `inputs/`.
    pub artifacts: BTreeMap<String, String>,
    /// sha256 of each file under `results/`.
    pub results: BTreeMap<String, String>,
    pub status: String,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<RunManifest> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Recompute the input hashes and compare.
    pub fn verify_inputs(&self, dir: &Path) -> Result<()> {
        for (name, want) in &self.artifacts {
            let path = dir.join("inputs").join(name);
            let got = sha256(&fs::read(&path).with_context(|| format!("reading {}", path.display()))?);
            if &got != want {
                bail!("input {name} does not match its recorded hash");
            }
        }
        Ok(())
    }
}

pub fn now() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string()
}

/// A fresh `<out>/<stamp>-<label>` directory.
pub fn fresh_dir(out: &Path, label: &str) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ");
    for i in 0.. {
        let name = if i == 0 { format!("{stamp}-{label}") } else { format!("{stamp}-{label}-{i}") };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

/// Writes inputs, results and the manifest of one run.
pub struct RunWriter {
    pub dir: PathBuf,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn create(out: &Path, command: Vec<String>, seed: Option<u64>, seeds: BTreeMap<String, u64>, started: String) -> Result<RunWriter> {
        let label = command.first().cloned().unwrap_or_default();
        let label = match command.get(1) {
            Some(k) if label == "simulate" => k.clone(),
            _ => label,
        };
        let dir = fresh_dir(out, &label)?;
        fs::create_dir(dir.join("inputs"))?;
        fs::create_dir(dir.join("results"))?;
        let manifest = RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed,
            seeds,
            config: String::new(),
            artifacts: BTreeMap::new(),
            results: BTreeMap::new(),
            status: "running".into(),
            started,
            finished: String::new(),
        };
        Ok(RunWriter { dir, manifest })
    }

    pub fn input(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join("inputs").join(name), contents)?;
        self.manifest.artifacts.insert(name.into(), sha256(contents.as_bytes()));
        Ok(())
    }

    pub fn set_config(&mut self, toml: String) {
        self.manifest.config = toml;
    }

    pub fn result(&mut self, name: &str, contents: &str) -> Result<()> {
        if self.manifest.results.contains_key(name) {
            bail!("result {name} written twice");
        }
        fs::write(self.dir.join("results").join(name), contents)?;
        self.manifest.results.insert(name.into(), sha256(contents.as_bytes()));
        Ok(())
    }

    pub fn finish(mut self, status: &str) -> Result<(PathBuf, RunManifest)> {
        self.manifest.status = status.into();
        self.manifest.finished = now();
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok((self.dir, self.manifest))
    }
}
