//! Flag / config-file / default resolution and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SEED_ENV: &str = "LPGKIT_SEED";

/// Resolves each setting as flag > config file > default and records the
/// outcome for the run manifest.
pub struct Resolver {
    file: Map<String, Value>,
    resolved: BTreeMap<String, Value>,
}

impl Resolver {
    /// `path` may be a plain JSON object keyed by flag names or a previous
    /// run manifest (its `config` object is used).
    pub fn new(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let value: Value =
                    serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                let Value::Object(mut map) = value else { bail!("config {} is not a JSON object", p.display()) };
                if map.get("tool").and_then(Value::as_str) == Some(crate::TOOL) {
                    match map.remove("config") {
                        Some(Value::Object(cfg)) => cfg,
                        _ => bail!("manifest {} has no config object", p.display()),
                    }
                } else {
                    map
                }
            }
        };
        Ok(Resolver { file, resolved: BTreeMap::new() })
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.resolved.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn file_value<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>> {
        match self.file.remove(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => Ok(Some(serde_json::from_value(v).with_context(|| format!("config key {key:?}"))?)),
        }
    }

    pub fn get<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let file_value = self.file_value(key)?;
        let value = flag.or(file_value).unwrap_or(default);
        self.record(key, &value)?;
        Ok(value)
    }

    pub fn opt<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let file_value = self.file_value(key)?;
        let value = flag.or(file_value);
        self.record(key, &value)?;
        Ok(value)
    }

    pub fn required<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => bail!("missing required setting --{key}"),
        }
    }

    /// A boolean switch: set by the flag or by the config file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let v = self.get(key, flag.then_some(true), false)?;
        Ok(v)
    }

    /// `--seed`, else config `seed`, else `LPGKIT_SEED`, else 0.
    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let env = match std::env::var(SEED_ENV) {
            Ok(s) => Some(s.trim().parse::<u64>().with_context(|| format!("{SEED_ENV}={s:?} is not a seed"))?),
            Err(_) => None,
        };
        let file_value = self.file_value("seed")?;
        let seed = flag.or(file_value).or(env).unwrap_or(0);
        self.record("seed", &seed)?;
        Ok(seed)
    }

    /// Rejects config keys nothing asked for; returns the resolved settings.
    pub fn finish(self) -> Result<Value> {
        if let Some(key) = self.file.keys().next() {
            bail!("unknown config key {key:?}");
        }
        Ok(Value::Object(self.resolved.into_iter().collect()))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn new(command: &'static str, config: Value, seed: Option<u64>, inputs: &[PathBuf]) -> Result<Self> {
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), sha256_file(p)?);
        }
        Ok(RunManifest {
            tool: crate::TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            seed,
            inputs: digests,
            outputs: Vec::new(),
            wall_time_secs: 0.0,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}
