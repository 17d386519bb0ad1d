//! Run manifests: resolved settings, input digests and outputs of one run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flags that take no value.
pub const SWITCHES: [&str; 5] = ["export_sigma", "no_normalize", "validation", "with_sigma", "no_sigma"];

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    /// Input name to `(path, sha256)`.
    pub inputs: BTreeMap<String, (PathBuf, String)>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub wall_clock_sec: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            wall_clock_sec: 0.0,
        }
    }

    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(name.to_string(), (path.to_path_buf(), digest));
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# glace run manifest\n");
        s += &format!("run.command={}\nrun.version={}\nrun.seed={}\n", self.command, self.version, self.seed);
        for (k, v) in &self.config {
            s += &format!("config.{k}={v}\n");
        }
        for (k, (p, d)) in &self.inputs {
            s += &format!("input.{k}={}\ninput.{k}.sha256={d}\n", p.display());
        }
        for (k, p) in &self.outputs {
            s += &format!("output.{k}={}\n", p.display());
        }
        s += &format!("run.wall_clock_sec={}\n", self.wall_clock_sec);
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("writing manifest {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = RunManifest::new("", 0, BTreeMap::new());
        let mut input_paths = BTreeMap::new();
        let mut input_digests = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let Some((k, v)) = line.split_once('=') else { bail!("manifest line {line:?} is not key=value") };
            if let Some(c) = k.strip_prefix("config.") {
                m.config.insert(c.to_string(), v.to_string());
            } else if let Some(name) = k.strip_prefix("input.") {
                match name.strip_suffix(".sha256") {
                    Some(n) => {
                        input_digests.insert(n.to_string(), v.to_string());
                    }
                    None => {
                        input_paths.insert(name.to_string(), PathBuf::from(v));
                    }
                }
            } else if let Some(name) = k.strip_prefix("output.") {
                m.outputs.insert(name.to_string(), PathBuf::from(v));
            } else {
                match k {
                    "run.command" => m.command = v.to_string(),
                    "run.version" => m.version = v.to_string(),
                    "run.seed" => m.seed = v.parse().context("manifest seed")?,
                    "run.wall_clock_sec" => m.wall_clock_sec = v.parse().context("manifest wall clock")?,
                    _ => bail!("unknown manifest key {k:?}"),
                }
            }
        }
        if m.command.is_empty() {
            bail!("manifest names no command");
        }
        for (name, path) in input_paths {
            let digest = input_digests.remove(&name).with_context(|| format!("input {name} has no digest"))?;
            m.inputs.insert(name, (path, digest));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Self::parse(&text)
    }

    /// Names of inputs whose current digest differs from the recorded one.
    pub fn changed_inputs(&self) -> Result<Vec<String>> {
        let mut changed = Vec::new();
        for (name, (path, digest)) in &self.inputs {
            if !path.exists() || &sha256_file(path)? != digest {
                changed.push(name.clone());
            }
        }
        Ok(changed)
    }

    /// Command line reproducing the run, with worker count pinned to one.
    pub fn replay_args(&self, out: Option<&Path>) -> Vec<String> {
        let mut args = vec!["glace".to_string(), self.command.clone()];
        for (k, v) in &self.config {
            let flag = format!("--{}", k.replace('_', "-"));
            let v = match (k.as_str(), out) {
                ("out", Some(o)) => o.display().to_string(),
                ("workers", _) => "1".to_string(),
                _ => v.clone(),
            };
            if SWITCHES.contains(&k.as_str()) {
                if v == "true" {
                    args.push(flag);
                }
            } else if k == "concat" {
                args.push(flag);
                args.extend(v.split('\t').map(String::from));
            } else {
                args.push(format!("{flag}={v}"));
            }
        }
        if let Some(out) = out.filter(|_| !self.config.contains_key("out")) {
            args.push(format!("--out={}", out.display()));
        }
        args
    }
}
