//! Layered settings: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use log::warn;

use crate::UsageError;

/// Parsed `key = value` file. Keys may carry a `config.` prefix; any other
/// dotted key is ignored, so a run manifest doubles as a config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("{}:{}: expected `key = value`", origin.display(), i + 1)))?;
            let key = k.trim().replace('-', "_");
            let key = key.strip_prefix("config.").unwrap_or(&key);
            if key.contains('.') {
                continue;
            }
            values.insert(key.to_string(), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, path)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Resolves each setting once and remembers the outcome for the manifest.
#[derive(Debug, Default)]
pub struct Resolver {
    file: ConfigFile,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Resolver { file, resolved: BTreeMap::new() })
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| UsageError(format!("config value {key} = {v:?} is not valid")).into()),
        }
    }

    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn path(&mut self, key: &str, flag: Option<&PathBuf>) -> Result<Option<PathBuf>> {
        let v = flag.cloned().or_else(|| self.file.get(key).map(PathBuf::from));
        if let Some(p) = &v {
            self.resolved.insert(key.to_string(), p.display().to_string());
        }
        Ok(v)
    }

    pub fn required_path(&mut self, key: &str, flag: Option<&PathBuf>) -> Result<PathBuf> {
        self.path(key, flag)?
            .ok_or_else(|| UsageError(format!("--{} is required (flag or config file)", key.replace('_', "-"))).into())
    }

    pub fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// Warn about config keys no setting asked for.
    pub fn warn_unused(&self) {
        for k in self.file.keys().filter(|k| !self.resolved.contains_key(*k)) {
            warn!("config key {k:?} is not used by this command");
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}
