//! Machine-translation backends behind an append-only response cache.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("no cached translation and no backend available (offline) for `{0}`")]
    ColdCache(String),
    #[error("backend request failed: {0}")]
    Backend(String),
    #[error("no table entry for `{0}`")]
    Missing(String),
    #[error("cache {path}: line {line}: {msg}")]
    CacheFormat {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("cache {0}: {1}")]
    CacheIo(PathBuf, std::io::Error),
    #[error("empty text cannot be translated")]
    EmptyText,
}

pub trait Backend {
    /// Stable identifier; part of every cache key.
    fn id(&self) -> String;
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, TranslateError>;
}

/// Returns its input.
pub struct Identity;

impl Backend for Identity {
    fn id(&self) -> String {
        "identity".into()
    }

    fn translate(&self, text: &str, _: &str, _: &str) -> Result<String, TranslateError> {
        Ok(text.to_string())
    }
}

/// Fixed lookup table, used for tests and hand-made fixtures.
pub struct Table {
    pub name: String,
    pub entries: HashMap<String, String>,
}

impl Table {
    /// Parse `source<TAB>target` lines.
    pub fn parse(name: &str, text: &str) -> Option<Table> {
        let mut entries = HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (a, b) = line.split_once('\t')?;
            entries.insert(a.to_string(), b.to_string());
        }
        Some(Table {
            name: name.to_string(),
            entries,
        })
    }
}

impl Backend for Table {
    fn id(&self) -> String {
        format!("table:{}", self.name)
    }

    fn translate(&self, text: &str, _: &str, _: &str) -> Result<String, TranslateError> {
        self.entries
            .get(text)
            .cloned()
            .ok_or_else(|| TranslateError::Missing(text.to_string()))
    }
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    text: &'a str,
    source_lang: &'a str,
    target_lang: &'a str,
}

#[derive(Deserialize)]
struct HttpResponse {
    text: String,
}

/// JSON-over-HTTP service: `POST {text, source_lang, target_lang}` answered
/// with `{text}`.
pub struct Http {
    pub endpoint: String,
    agent: ureq::Agent,
}

impl Http {
    pub fn new(endpoint: impl Into<String>) -> Http {
        Http {
            endpoint: endpoint.into(),
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl Backend for Http {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, TranslateError> {
        let body = HttpRequest {
            text,
            source_lang: src,
            target_lang: tgt,
        };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| TranslateError::Backend(e.to_string()))?;
        let parsed: HttpResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| TranslateError::Backend(e.to_string()))?;
        Ok(parsed.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub backend: String,
    pub source_lang: String,
    pub target_lang: String,
    pub text: String,
    pub translation: String,
}

pub fn cache_key(backend: &str, src: &str, tgt: &str, text: &str) -> String {
    let mut h = Sha256::new();
    for part in [backend, src, tgt, text] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Line-delimited JSON cache. Entries are only ever appended; when a key
/// appears twice the first entry wins.
pub struct Cache {
    path: Option<PathBuf>,
    entries: HashMap<String, String>,
}

impl Cache {
    pub fn in_memory() -> Cache {
        Cache {
            path: None,
            entries: HashMap::new(),
        }
    }

    /// Open (or start) a cache file.
    pub fn open(path: &Path) -> Result<Cache, TranslateError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let f = File::open(path).map_err(|e| TranslateError::CacheIo(path.into(), e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| TranslateError::CacheIo(path.into(), e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let e: CacheEntry =
                    serde_json::from_str(&line).map_err(|e| TranslateError::CacheFormat {
                        path: path.into(),
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
                entries.entry(e.key).or_insert(e.translation);
            }
        }
        Ok(Cache {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn store(&mut self, entry: CacheEntry) -> Result<(), TranslateError> {
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| TranslateError::CacheIo(path.clone(), e))?;
            let mut line = serde_json::to_string(&entry).expect("entry serializes");
            line.push('\n');
            f.write_all(line.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| TranslateError::CacheIo(path.clone(), e))?;
        }
        self.entries.insert(entry.key, entry.translation);
        Ok(())
    }
}

/// Cache-first translation for one language pair. With no backend the
/// client replays the cache and fails on a miss.
pub struct Client {
    backend_id: String,
    backend: Option<Box<dyn Backend>>,
    cache: Cache,
    pub source_lang: String,
    pub target_lang: String,
    pub network_calls: usize,
    pub cache_hits: usize,
}

impl Client {
    pub fn new(backend: Box<dyn Backend>, cache: Cache, src: &str, tgt: &str) -> Client {
        Client {
            backend_id: backend.id(),
            backend: Some(backend),
            cache,
            source_lang: src.to_string(),
            target_lang: tgt.to_string(),
            network_calls: 0,
            cache_hits: 0,
        }
    }

    /// Replay-only client for a recorded session of `backend_id`.
    pub fn offline(backend_id: &str, cache: Cache, src: &str, tgt: &str) -> Client {
        Client {
            backend_id: backend_id.to_string(),
            backend: None,
            cache,
            source_lang: src.to_string(),
            target_lang: tgt.to_string(),
            network_calls: 0,
            cache_hits: 0,
        }
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    pub fn translate(&mut self, text: &str) -> Result<String, TranslateError> {
        if text.trim().is_empty() {
            return Err(TranslateError::EmptyText);
        }
        let key = cache_key(&self.backend_id, &self.source_lang, &self.target_lang, text);
        if let Some(hit) = self.cache.get(&key) {
            self.cache_hits += 1;
            return Ok(hit.to_string());
        }
        let backend = self
            .backend
            .as_ref()
            .ok_or_else(|| TranslateError::ColdCache(text.to_string()))?;
        self.network_calls += 1;
        let out = backend.translate(text, &self.source_lang, &self.target_lang)?;
        self.cache.store(CacheEntry {
            key,
            backend: self.backend_id.clone(),
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
            text: text.to_string(),
            translation: out.clone(),
        })?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Box<Table> {
        Box::new(Table::parse("t", "Anger at prices\tWut über Preise\n").unwrap())
    }

    #[test]
    fn second_call_hits_cache() {
        let mut c = Client::new(table(), Cache::in_memory(), "en", "de");
        assert_eq!(c.translate("Anger at prices").unwrap(), "Wut über Preise");
        assert_eq!(c.translate("Anger at prices").unwrap(), "Wut über Preise");
        assert_eq!((c.network_calls, c.cache_hits), (1, 1));
        assert!(matches!(
            c.translate("unknown"),
            Err(TranslateError::Missing(_))
        ));
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let mut rec = Client::new(table(), Cache::open(&path).unwrap(), "en", "de");
        rec.translate("Anger at prices").unwrap();
        let mut replay = Client::offline("table:t", Cache::open(&path).unwrap(), "en", "de");
        assert_eq!(
            replay.translate("Anger at prices").unwrap(),
            "Wut über Preise"
        );
        assert_eq!(replay.network_calls, 0);
        assert!(matches!(
            replay.translate("other"),
            Err(TranslateError::ColdCache(_))
        ));
    }

    #[test]
    fn keys_separate_fields() {
        assert_ne!(
            cache_key("a", "en", "de", "bc"),
            cache_key("ab", "en", "de", "c")
        );
        assert_ne!(
            cache_key("a", "en", "de", "x"),
            cache_key("a", "en", "fr", "x")
        );
    }
}
