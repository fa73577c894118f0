//! Key-value run configuration. A config file records the inputs and seeds
//! of a run in one reviewable artifact; command-line flags override any key.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored. Values keep internal whitespace but are trimmed at
//! the ends.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use care_sd_core::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(path, lineno + 1, "expected `key = value`")
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::format(path, lineno + 1, "empty key"));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::format(path, lineno + 1, format!("duplicate key {key:?}")));
            }
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn get_parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                Error::Config(format!("config key {key} = {raw:?}: {e}"))
            }),
        }
    }

    /// Comma-separated list value; empty entries are dropped.
    pub fn get_list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|raw| {
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
    }
}

/// Flag value if given, else the config value under `key`, else the error
/// naming what is missing.
pub fn require_path(flag: Option<PathBuf>, config: &FileConfig, key: &str) -> Result<PathBuf> {
    flag.or_else(|| config.get_path(key)).ok_or_else(|| {
        Error::Config(format!("missing --{} flag (or config key {key})", key.replace('.', "-")))
    })
}

pub fn optional_path(flag: Option<PathBuf>, config: &FileConfig, key: &str) -> Option<PathBuf> {
    flag.or_else(|| config.get_path(key))
}

pub fn resolve<T>(flag: Option<T>, config: Result<Option<T>>, default: T) -> Result<T> {
    Ok(flag.or(config?).unwrap_or(default))
}

pub fn require_seed(flag: Option<u64>, config: &FileConfig, key: &str) -> Result<u64> {
    flag.or(config.get_parsed(key)?).ok_or_else(|| {
        Error::Config(format!(
            "missing --{} flag (or config key {key}); seeds must be explicit",
            key.replace('.', "-")
        ))
    })
}

/// Parses a comma-separated numeric list flag such as `--sizes 100,400,500`.
pub fn parse_number_list<T>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    let values: Vec<T> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| Error::Config(format!("{what}: bad entry {s:?}: {e}"))))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Config(format!("{what}: empty list")));
    }
    Ok(values)
}
