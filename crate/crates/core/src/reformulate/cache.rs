use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::PromptText;
use super::ReformulateError;

/// On-disk layout of one cached completion, `<cache_dir>/<key>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt_hash: String,
    pub model: String,
    pub temperature: f64,
    pub completion: String,
    pub created_unix: u64,
}

/// Content-addressed completion cache keyed by prompt, model and temperature.
#[derive(Debug, Clone)]
pub struct CompletionCache {
    dir: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl CompletionCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, ReformulateError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| ReformulateError::Cache { path: dir.clone(), source })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(prompt: &PromptText) -> String {
        let material = serde_json::to_vec(&(&prompt.text, &prompt.model_hint, prompt.temperature))
            .expect("tuple of strings and a float serializes");
        sha256_hex(&material)
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Cached completion for `prompt`. Unreadable or empty entries count as
    /// misses and are overwritten by the next [`put`](Self::put).
    pub fn get(&self, prompt: &PromptText) -> Option<CacheEntry> {
        let text = std::fs::read_to_string(self.path(&Self::key(prompt))).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (!entry.completion.trim().is_empty()).then_some(entry)
    }

    /// Writes through a temp file in the cache dir, then renames into place.
    pub fn put(&self, prompt: &PromptText, completion: &str) -> Result<CacheEntry, ReformulateError> {
        let entry = CacheEntry {
            prompt_hash: sha256_hex(prompt.text.as_bytes()),
            model: prompt.model_hint.clone(),
            temperature: prompt.temperature,
            completion: completion.to_string(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let path = self.path(&Self::key(prompt));
        let err = |source| ReformulateError::Cache { path: path.clone(), source };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        let json = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
        tmp.write_all(json.as_bytes()).map_err(err)?;
        tmp.as_file().sync_all().map_err(err)?;
        tmp.persist(&path).map_err(|e| err(e.error))?;
        Ok(entry)
    }

    /// Number of `*.json` entries currently stored.
    pub fn len(&self) -> usize {
        std::fs::read_dir(&self.dir)
            .map(|rd| rd.filter_map(Result::ok).filter(|e| e.path().extension().is_some_and(|x| x == "json")).count())
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(text: &str, t: f64) -> PromptText {
        PromptText { text: text.into(), model_hint: "m".into(), temperature: t }
    }

    #[test]
    fn key_depends_on_all_parts() {
        let a = CompletionCache::key(&prompt("p", 0.0));
        assert_eq!(a.len(), 64);
        assert_ne!(a, CompletionCache::key(&prompt("p", 0.5)));
        assert_ne!(a, CompletionCache::key(&prompt("q", 0.0)));
        let mut other_model = prompt("p", 0.0);
        other_model.model_hint = "n".into();
        assert_ne!(a, CompletionCache::key(&other_model));
        assert_eq!(a, CompletionCache::key(&prompt("p", 0.0)));
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CompletionCache::new(dir.path().join("c")).unwrap();
        let p = prompt("p", 0.0);
        assert!(cache.get(&p).is_none());
        cache.put(&p, "answer").unwrap();
        let e = cache.get(&p).unwrap();
        assert_eq!(e.completion, "answer");
        assert_eq!(e.prompt_hash, sha256_hex(b"p"));
        assert_eq!(cache.len(), 1);
        let file = cache.dir().join(format!("{}.json", CompletionCache::key(&p)));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
        for k in ["prompt_hash", "model", "temperature", "completion", "created_unix"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CompletionCache::new(dir.path()).unwrap();
        let p = prompt("p", 0.0);
        std::fs::write(dir.path().join(format!("{}.json", CompletionCache::key(&p))), "{nope").unwrap();
        assert!(cache.get(&p).is_none());
        cache.put(&p, "fresh").unwrap();
        assert_eq!(cache.get(&p).unwrap().completion, "fresh");
    }

    #[test]
    fn concurrent_writers_same_key() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CompletionCache::new(dir.path()).unwrap();
        let p = prompt("shared", 0.0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..10 {
                        cache.put(&p, "same").unwrap();
                        if let Some(e) = cache.get(&p) {
                            assert_eq!(e.completion, "same");
                        }
                    }
                });
            }
        });
        assert_eq!(cache.len(), 1);
    }
}
