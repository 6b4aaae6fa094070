//! Record/replay cassettes for chat and embedding traffic.
//!
//! A cassette stores `(task, payload-hash) → raw response` for chat calls and
//! `text-hash → vector` for embeddings, persisted as one canonical-JSON file.
//! Record mode captures whatever the inner adapter returns; replay mode
//! serves from the store and errors on a miss, so replayed runs make zero
//! network calls.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::AdapterError;
use crate::util::canon::{self, sha256_hex};

use super::{ChatRequest, ChatTransport, EmbeddingAdapter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassetteMode {
    Record,
    Replay,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Store {
    #[serde(default)]
    chat: BTreeMap<String, String>,
    #[serde(default)]
    embed: BTreeMap<String, Vec<f64>>,
}

/// Shared cassette state; cloneable across the chat and embed wrappers.
#[derive(Debug)]
pub struct Cassette {
    mode: CassetteMode,
    path: PathBuf,
    store: Mutex<Store>,
}

impl Cassette {
    /// Open a cassette file. Replay mode requires the file to exist.
    pub fn open(mode: CassetteMode, path: impl AsRef<Path>) -> Result<Arc<Self>, AdapterError> {
        let path = path.as_ref().to_path_buf();
        let store = if path.exists() {
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| AdapterError::CassetteCorrupt(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| AdapterError::CassetteCorrupt(format!("{}: {e}", path.display())))?
        } else if mode == CassetteMode::Replay {
            return Err(AdapterError::CassetteCorrupt(format!(
                "replay cassette not found: {}",
                path.display()
            )));
        } else {
            Store::default()
        };
        Ok(Arc::new(Self {
            mode,
            path,
            store: Mutex::new(store),
        }))
    }

    fn chat_key(req: &ChatRequest) -> String {
        format!("{}:{}", req.task_id, req.payload_hash)
    }

    /// Entries currently held (chat + embed).
    pub fn len(&self) -> usize {
        let store = self.store.lock().expect("cassette lock");
        store.chat.len() + store.embed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Persist the store as canonical JSON (record mode only).
    pub fn flush(&self) -> Result<(), AdapterError> {
        if self.mode == CassetteMode::Replay {
            return Ok(());
        }
        let store = self.store.lock().expect("cassette lock");
        let body = canon::to_canonical_pretty(&*store)
            .map_err(|e| AdapterError::CassetteCorrupt(e.to_string()))?;
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| {
                    AdapterError::CassetteCorrupt(format!("{}: {e}", parent.display()))
                })?;
            }
        }
        std::fs::write(&self.path, body)
            .map_err(|e| AdapterError::CassetteCorrupt(format!("{}: {e}", self.path.display())))?;
        Ok(())
    }
}

/// Chat transport wrapper backed by a cassette.
pub struct CassetteChat {
    cassette: Arc<Cassette>,
    inner: Option<Arc<dyn ChatTransport>>,
}

impl CassetteChat {
    /// Record mode: `inner` handles misses and responses are captured.
    pub fn record(cassette: Arc<Cassette>, inner: Arc<dyn ChatTransport>) -> Self {
        Self {
            cassette,
            inner: Some(inner),
        }
    }

    /// Replay mode: every call must hit the store.
    pub fn replay(cassette: Arc<Cassette>) -> Self {
        Self {
            cassette,
            inner: None,
        }
    }
}

impl ChatTransport for CassetteChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, AdapterError> {
        let key = Cassette::chat_key(req);
        {
            let store = self.cassette.store.lock().expect("cassette lock");
            if let Some(hit) = store.chat.get(&key) {
                return Ok(hit.clone());
            }
        }
        match &self.inner {
            Some(inner) => {
                let response = inner.complete(req)?;
                let mut store = self.cassette.store.lock().expect("cassette lock");
                store.chat.insert(key, response.clone());
                Ok(response)
            }
            None => Err(AdapterError::ReplayMiss {
                task: req.task_id.clone(),
                key,
            }),
        }
    }
}

/// Embedding wrapper backed by the same cassette file.
pub struct CassetteEmbed {
    cassette: Arc<Cassette>,
    inner: Option<Arc<dyn EmbeddingAdapter>>,
}

impl CassetteEmbed {
    pub fn record(cassette: Arc<Cassette>, inner: Arc<dyn EmbeddingAdapter>) -> Self {
        Self {
            cassette,
            inner: Some(inner),
        }
    }

    pub fn replay(cassette: Arc<Cassette>) -> Self {
        Self {
            cassette,
            inner: None,
        }
    }
}

impl EmbeddingAdapter for CassetteEmbed {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, AdapterError> {
        if texts.is_empty() {
            return Err(AdapterError::Embedding(
                "embed() requires a non-empty input list".to_string(),
            ));
        }
        let keys: Vec<String> = texts.iter().map(|t| sha256_hex(t.as_bytes())).collect();

        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        let mut missing: Vec<usize> = Vec::new();
        {
            let store = self.cassette.store.lock().expect("cassette lock");
            for (i, key) in keys.iter().enumerate() {
                match store.embed.get(key) {
                    Some(v) => out[i] = Some(v.clone()),
                    None => missing.push(i),
                }
            }
        }

        if !missing.is_empty() {
            let inner = self.inner.as_ref().ok_or_else(|| AdapterError::ReplayMiss {
                task: "embed".to_string(),
                key: keys[missing[0]].clone(),
            })?;
            let texts_to_fetch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fetched = inner.embed(&texts_to_fetch)?;
            let mut store = self.cassette.store.lock().expect("cassette lock");
            for (slot, vector) in missing.iter().zip(fetched) {
                store.embed.insert(keys[*slot].clone(), vector.clone());
                out[*slot] = Some(vector);
            }
        }

        Ok(out.into_iter().map(|v| v.expect("all slots filled")).collect())
    }
}
