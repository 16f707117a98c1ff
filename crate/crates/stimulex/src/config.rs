//! Flat `key = value` configuration files. Keys are the long names of the
//! command-line flags; a key may repeat for list-valued settings. Flags
//! given on the command line take precedence.

use std::collections::BTreeMap;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const KNOWN_KEYS: &[&str] = &[
    "in",
    "out",
    "report",
    "lexicon",
    "stopwords",
    "model",
    "gold",
    "pred",
    "a",
    "b",
    "conflicts",
    "train",
    "test",
    "ratio",
    "seed",
    "features",
    "top-k",
    "l2-sigma",
    "max-iterations",
    "tolerance",
    "max-features",
    "memory",
    "unconstrained",
    "backend",
    "endpoint",
    "table",
    "cache",
    "source-lang",
    "target-lang",
    "fuzzy-threshold",
    "log",
    "min-words",
    "keyword",
    "marker",
    "date-pattern",
    "kv",
    "svg",
    "label",
    "lenient",
    "offline",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("config line {0}: unknown key `{1}`")]
    UnknownKey(usize, String),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            let k = k.trim();
            if !KNOWN_KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(i + 1, k.to_string()));
            }
            entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(ConfigFile { entries })
    }

    /// Last value given for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }
}

/// Settings as finally resolved for a run; hashed into the manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effective {
    values: BTreeMap<String, String>,
    cfg: ConfigFile,
}

impl Effective {
    pub fn new(cfg: ConfigFile) -> Effective {
        Effective {
            values: BTreeMap::new(),
            cfg,
        }
    }

    fn record(&mut self, key: &str, v: String) {
        self.values.insert(key.to_string(), v);
    }

    /// Flag, else config value, else `None`.
    pub fn opt<T: FromStr + ToString>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.cfg.get(key) {
                Some(s) => Some(s.parse().map_err(|_| ConfigError::Value {
                    key: key.to_string(),
                    value: s.to_string(),
                })?),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.record(key, v.to_string());
        }
        Ok(v)
    }

    /// Flag, else config value, else `default`.
    pub fn or<T: FromStr + ToString>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, ConfigError> {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn flag(&mut self, key: &str, flag: bool) -> Result<bool, ConfigError> {
        let v = if flag {
            true
        } else {
            self.opt::<bool>(key, None)?.unwrap_or(false)
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    /// List setting: flags if any were given, else every config value,
    /// else `default`.
    pub fn list(&mut self, key: &str, flags: Vec<String>, default: &[&str]) -> Vec<String> {
        let mut v: Vec<String> = if flags.is_empty() {
            self.cfg
                .get_all(key)
                .into_iter()
                .map(String::from)
                .collect()
        } else {
            flags
        };
        if v.is_empty() {
            v = default.iter().map(|s| s.to_string()).collect();
        }
        self.record(key, v.join("\u{1f}"));
        v
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.values {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_and_lists_repeat() {
        let cfg = ConfigFile::parse("# c\nseed = 7\nratio=0.5\nkeyword=A\nkeyword=B\n").unwrap();
        let mut e = Effective::new(cfg);
        assert_eq!(e.or("seed", Some(9u64), 0).unwrap(), 9);
        assert_eq!(e.or("ratio", None, 0.8f64).unwrap(), 0.5);
        assert_eq!(e.or("top-k", None, 50usize).unwrap(), 50);
        assert_eq!(e.list("keyword", vec![], &["Z"]), vec!["A", "B"]);
        assert_eq!(e.list("marker", vec![], &["Z"]), vec!["Z"]);
        assert_eq!(e.values()["seed"], "9");
    }

    #[test]
    fn bad_files() {
        assert_eq!(ConfigFile::parse("seed"), Err(ConfigError::Syntax(1)));
        assert_eq!(
            ConfigFile::parse("sed=1"),
            Err(ConfigError::UnknownKey(1, "sed".into()))
        );
        let mut e = Effective::new(ConfigFile::parse("seed=x").unwrap());
        assert!(e.or::<u64>("seed", None, 0).is_err());
    }

    #[test]
    fn hash_tracks_values() {
        let mut a = Effective::default();
        a.or("seed", Some(1u64), 0).unwrap();
        let mut b = Effective::default();
        b.or("seed", Some(2u64), 0).unwrap();
        assert_ne!(a.hash(), b.hash());
        let mut c = Effective::default();
        c.or("seed", Some(1u64), 0).unwrap();
        assert_eq!(a.hash(), c.hash());
    }
}
