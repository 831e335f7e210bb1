//! Parameter resolution (flags over the `[command]` config table over
//! global config keys over defaults) and run manifests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use toml::Value;

use crate::CliError;

pub struct Settings {
    command: String,
    config: BTreeMap<String, Value>,
    section_keys: BTreeSet<String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn value_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(b) => Some(b.to_string()),
        Value::Array(items) => items.iter().map(value_text).collect::<Option<Vec<_>>>().map(|v| v.join(",")),
        _ => None,
    }
}

impl Settings {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let mut config = BTreeMap::new();
        let mut section_keys = BTreeSet::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { context: format!("reading {}", path.display()), source })?;
            let table: toml::Table = toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            let mut section = None;
            for (k, v) in table {
                match v {
                    Value::Table(t) if k == command => section = Some(t),
                    Value::Table(_) => {}
                    other => {
                        config.insert(k, other);
                    }
                }
            }
            for (k, v) in section.into_iter().flatten() {
                section_keys.insert(k.clone());
                config.insert(k, v);
            }
        }
        Ok(Settings {
            command: command.to_string(),
            config,
            section_keys,
            used: BTreeSet::new(),
            resolved: BTreeMap::new(),
        })
    }

    fn lookup(&mut self, key: &str) -> Result<Option<String>, CliError> {
        self.used.insert(key.to_string());
        match self.config.get(key) {
            None => Ok(None),
            Some(v) => value_text(v).map(Some).ok_or_else(|| usage(format!("config key `{key}` has an unsupported type"))),
        }
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_string(), value);
    }

    /// Flag, then config, then `default`; the result enters the manifest.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
    {
        let v = self.get_opt(key, flag)?.unwrap_or(default);
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Like [`Settings::get`] without a default; absent values are recorded as empty.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.lookup(key)? {
                Some(text) => Some(text.parse::<T>().map_err(|_| usage(format!("config key `{key}`: cannot parse `{text}`")))?),
                None => None,
            },
        };
        self.record(key, v.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "(unset)".to_string()));
        Ok(v)
    }

    /// Reads a value that must not influence results (kept out of the
    /// manifest and hash).
    pub fn get_opt_untracked<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => match self.lookup(key)? {
                Some(text) => text.parse::<T>().map(Some).map_err(|_| usage(format!("config key `{key}`: cannot parse `{text}`"))),
                None => Ok(None),
            },
        }
    }

    /// Records a derived value (not user input) in the manifest and hash.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.record(key, value.to_string());
    }

    /// Rejects keys in the command's own config table that no parameter read.
    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<&String> = self.section_keys.iter().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!("unknown keys in [{}]: {unknown:?}", self.command)))
        }
    }

    /// SHA-256 over the command and every resolved parameter.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command={}\n", self.command));
        for (k, v) in &self.resolved {
            h.update(format!("{k}={v}\n"));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn manifest(&self, output: &str, summary: &[(String, String)]) -> String {
        let mut m = String::new();
        m.push_str(&format!("command = {}\n", self.command));
        m.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        m.push_str(&format!("config_hash = sha256:{}\n", self.config_hash()));
        m.push_str(&format!("output = {output}\n"));
        m.push_str("rng = ChaCha8 stream seeded from the 64-bit seed\n");
        for (k, v) in &self.resolved {
            m.push_str(&format!("param.{k} = {v}\n"));
        }
        for (k, v) in summary {
            m.push_str(&format!("result.{k} = {v}\n"));
        }
        m
    }
}
