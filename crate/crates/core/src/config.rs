//! Run configuration: one TOML file with `sim`, `detectors`, `bench` and
//! `output_dir`.
//!
//! Keys missing from the file keep the values of [`RunConfig::default`],
//! section by section. Any key can then be overridden from the environment
//! as `RCMC_<SECTION>__<KEY>`, with `__` separating path components, for
//! example `RCMC_SIM__D_MOL=2e-11` or `RCMC_BENCH__T_B=[10,100]`. Values are
//! read as TOML literals and fall back to plain strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::bench::{BenchConfig, DetectorConfig};
use crate::error::{Error, Result};
use crate::sim::SimConfig;

pub const ENV_PREFIX: &str = "RCMC_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub detectors: DetectorConfig,
    pub bench: BenchConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    /// The reduced-scale benchmark scenario.
    fn default() -> Self {
        RunConfig {
            sim: SimConfig::desk(),
            detectors: DetectorConfig::desk(),
            bench: BenchConfig::default(),
            output_dir: PathBuf::from("rcmc-out"),
        }
    }
}

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig { field, reason } if !field.contains('.') => {
            Error::InvalidConfig { field: format!("{section}.{field}"), reason }
        }
        other => other,
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate().map_err(|e| prefixed("sim", e))?;
        self.detectors.validate().map_err(|e| prefixed("detectors", e))?;
        self.bench.validate().map_err(|e| prefixed("bench", e))?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        Ok(())
    }

    /// Parse `text` over the defaults, apply `overrides`, and validate.
    pub fn from_toml_with<I>(text: &str, overrides: I) -> Result<RunConfig>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let user: Table = text.parse().map_err(|e: toml::de::Error| Error::parse("config", e.to_string().trim()))?;
        let mut base = default_table()?;
        merge(&mut base, user);
        for (key, value) in overrides {
            apply_override(&mut base, &key, &value)?;
        }
        let cfg: RunConfig = Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::parse("config", e.to_string().trim()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        Self::from_toml_with(text, std::iter::empty())
    }

    /// Load `source`, where `default` means the built-in configuration, and
    /// apply `RCMC_` environment overrides.
    pub fn load(source: &str) -> Result<RunConfig> {
        let text = if source == "default" {
            String::new()
        } else {
            std::fs::read_to_string(Path::new(source))
                .map_err(|e| Error::parse(format!("config {source}"), e))?
        };
        Self::from_toml_with(&text, env_overrides())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse("config", e))
    }
}

fn default_table() -> Result<Table> {
    Table::try_from(RunConfig::default()).map_err(|e| Error::parse("default config", e))
}

fn merge(base: &mut Table, user: Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// `(key, value)` pairs of every `RCMC_*` variable, key without prefix.
pub fn env_overrides() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::env::vars()
        .filter_map(|(k, val)| k.strip_prefix(ENV_PREFIX).map(|s| (s.to_string(), val)))
        .collect();
    v.sort();
    v
}

fn apply_override(base: &mut Table, key: &str, value: &str) -> Result<()> {
    let path: Vec<String> = key.split("__").map(|p| p.to_ascii_lowercase()).collect();
    let dotted = path.join(".");
    let (last, parents) = path.split_last().ok_or_else(|| Error::config(dotted.clone(), "empty key"))?;
    let mut table = base;
    for p in parents {
        table = match table.get_mut(p) {
            Some(Value::Table(t)) => t,
            _ => return Err(Error::config(dotted, "no such configuration section")),
        };
    }
    if !table.contains_key(last) {
        return Err(Error::config(dotted, "no such configuration key"));
    }
    let parsed = format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()));
    table.insert(last.clone(), parsed);
    Ok(())
}
