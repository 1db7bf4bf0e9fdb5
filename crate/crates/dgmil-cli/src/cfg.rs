//! Config-file loading and flag/file/default precedence.
//!
//! The file format is flat `key=value` lines with `#` comments; keys are the
//! long flag names of the invoked subcommand (plus the globals). Precedence:
//! an explicitly passed flag wins, then the file entry, then the built-in
//! default. Keys that match nothing are rejected so typos cannot silently
//! fall back to defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;
use dgmil::error::{Error, Result};

pub struct FileConfig {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            entries: BTreeMap::new(),
            used: RefCell::new(BTreeSet::new()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        Ok(FileConfig {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v.map(|s| s.as_str())
    }

    /// After every known key has been resolved, anything untouched is a typo.
    pub fn check_fully_used(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self
            .entries
            .keys()
            .filter(|k| !used.contains(k.as_str()))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "config file has keys not recognized by this subcommand: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

fn kebab(id: &str) -> String {
    id.replace('_', "-")
}

/// Resolve one setting: explicit CLI flag > config-file entry > default
/// (which is what clap already put in `cli_value`).
pub fn resolve<T>(matches: &ArgMatches, file: &FileConfig, id: &str, cli_value: T) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let key = kebab(id);
    if matches!(matches.value_source(id), Some(ValueSource::CommandLine)) {
        let _ = file.get(&key); // flag overrides; key still counts as known
        return Ok(cli_value);
    }
    match file.get(&key) {
        Some(raw) => raw
            .parse()
            .map_err(|e| Error::Config(format!("config key `{key}`: {e}"))),
        None => Ok(cli_value),
    }
}

/// Same, for optional settings with no default.
pub fn resolve_opt<T>(
    matches: &ArgMatches,
    file: &FileConfig,
    id: &str,
    cli_value: Option<T>,
) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let key = kebab(id);
    if matches!(matches.value_source(id), Some(ValueSource::CommandLine)) {
        let _ = file.get(&key);
        return Ok(cli_value);
    }
    match file.get(&key) {
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|e| Error::Config(format!("config key `{key}`: {e}"))),
        None => Ok(cli_value),
    }
}
