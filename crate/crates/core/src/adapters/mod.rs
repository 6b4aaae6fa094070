//! Provider-agnostic chat and embedding boundaries.
//!
//! All model traffic flows through [`ChatClient::call`], which renders the
//! task template, dispatches to a [`ChatTransport`], repairs truncated JSON,
//! validates the response against the task schema, and retries once on
//! schema failure. Transports are interchangeable: a deterministic mock, a
//! record/replay cassette wrapper, or a live HTTP provider.

pub mod cassette;
pub mod http;
pub mod mock;
pub mod task;

use std::sync::Arc;

use serde_json::Value;

use crate::error::AdapterError;
use crate::util::canon;

pub use cassette::{Cassette, CassetteChat, CassetteEmbed, CassetteMode};
pub use mock::{FailingChat, HashEmbedder, MockChat, PipelineMock};
pub use task::{ChatTask, Shape, TaskCatalog};

/// One rendered request handed to a transport.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub task_id: String,
    pub prompt: String,
    pub payload: Value,
    /// SHA-256 of the canonical payload; cassette and mock key.
    pub payload_hash: String,
    pub temperature: f64,
    pub max_output_fraction: f64,
}

/// Raw completion boundary. Implementations must be safe for concurrent use.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, AdapterError>;
}

/// Text embedding boundary. Vectors are unit L2-norm, fixed dimension.
pub trait EmbeddingAdapter: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, AdapterError>;

    fn embed_one(&self, text: &str) -> Result<Vec<f64>, AdapterError> {
        Ok(self
            .embed(&[text.to_string()])?
            .into_iter()
            .next()
            .expect("embed() returns one vector per input"))
    }
}

/// Validated result of a chat call.
#[derive(Debug, Clone)]
pub struct ChatOutcome {
    pub value: Value,
    /// Set when the transport response was cut off and force-parsed to the
    /// last complete JSON value.
    pub truncated: bool,
}

/// Task-aware chat front end: template rendering, validation, retry.
#[derive(Clone)]
pub struct ChatClient {
    catalog: Arc<TaskCatalog>,
    transport: Arc<dyn ChatTransport>,
}

impl ChatClient {
    pub fn new(catalog: TaskCatalog, transport: Arc<dyn ChatTransport>) -> Self {
        Self {
            catalog: Arc::new(catalog),
            transport,
        }
    }

    pub fn catalog(&self) -> &TaskCatalog {
        &self.catalog
    }

    /// Execute one task call: render, dispatch, parse, validate.
    ///
    /// Schema-invalid or unparseable responses are retried once with a fresh
    /// transport call before the error is surfaced.
    pub fn call(&self, task_id: &str, payload: Value) -> Result<ChatOutcome, AdapterError> {
        let task = self.catalog.get(task_id)?;
        let prompt = task.render(&payload)?;
        let payload_hash = canon::payload_hash(&payload).map_err(|e| AdapterError::Transport {
            task: task_id.to_string(),
            message: format!("payload not hashable: {e}"),
        })?;
        let req = ChatRequest {
            task_id: task_id.to_string(),
            prompt,
            payload,
            payload_hash,
            temperature: task.temperature,
            max_output_fraction: task.max_output_fraction,
        };

        let mut last_err = None;
        for _attempt in 0..2 {
            let raw = self.transport.complete(&req)?;
            match parse_response(task, &raw) {
                Ok(outcome) => return Ok(outcome),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("retry loop ran at least once"))
    }
}

fn parse_response(task: &ChatTask, raw: &str) -> Result<ChatOutcome, AdapterError> {
    if let Ok(value) = serde_json::from_str::<Value>(raw.trim()) {
        task.schema
            .validate(&value)
            .map_err(|message| AdapterError::Schema {
                task: task.id.clone(),
                message,
            })?;
        return Ok(ChatOutcome {
            value,
            truncated: false,
        });
    }

    // Truncated: walk repair candidates from the longest prefix backwards
    // and accept the first one that also satisfies the task schema, so a
    // partial trailing element never leaks through.
    let candidates = repair_candidates(raw);
    if candidates.is_empty() {
        return Err(AdapterError::Truncated {
            task: task.id.clone(),
        });
    }
    let mut first_schema_error = None;
    for value in candidates {
        match task.schema.validate(&value) {
            Ok(()) => {
                return Ok(ChatOutcome {
                    value,
                    truncated: true,
                })
            }
            Err(message) => {
                first_schema_error.get_or_insert(message);
            }
        }
    }
    Err(AdapterError::Schema {
        task: task.id.clone(),
        message: first_schema_error.unwrap_or_else(|| "unrepairable response".to_string()),
    })
}

/// Force-parse a cut-off response to its last complete JSON value.
pub fn repair_truncated(raw: &str) -> Option<Value> {
    repair_candidates(raw).into_iter().next()
}

/// Parseable repair candidates, longest prefix first.
///
/// Scans from the first opening bracket, remembers positions where a value
/// just completed, and closes any brackets still open there. A trailing
/// partial element is dropped.
pub fn repair_candidates(raw: &str) -> Vec<Value> {
    let Some(start) = raw.find(['{', '[']) else {
        return Vec::new();
    };
    let s = &raw[start..];

    let mut cuts: Vec<usize> = Vec::new();
    {
        let mut in_str = false;
        let mut esc = false;
        for (i, c) in s.char_indices() {
            if in_str {
                if esc {
                    esc = false;
                } else if c == '\\' {
                    esc = true;
                } else if c == '"' {
                    in_str = false;
                    cuts.push(i + 1);
                }
                continue;
            }
            match c {
                '"' => in_str = true,
                '}' | ']' => cuts.push(i + 1),
                ',' => cuts.push(i),
                _ => {}
            }
        }
        if !in_str {
            cuts.push(s.len());
        }
    }
    cuts.dedup();

    let mut out = Vec::new();
    for &cut in cuts.iter().rev().take(50) {
        let prefix = s[..cut].trim_end().trim_end_matches(',');
        if prefix.is_empty() {
            continue;
        }
        // Recompute the open-bracket stack for this prefix.
        let mut stack: Vec<char> = Vec::new();
        let mut in_str = false;
        let mut esc = false;
        let mut balanced = true;
        for c in prefix.chars() {
            if in_str {
                if esc {
                    esc = false;
                } else if c == '\\' {
                    esc = true;
                } else if c == '"' {
                    in_str = false;
                }
                continue;
            }
            match c {
                '"' => in_str = true,
                '{' => stack.push('}'),
                '[' => stack.push(']'),
                '}' | ']'
                    if stack.pop() != Some(c) => {
                        balanced = false;
                        break;
                    }
                _ => {}
            }
        }
        if !balanced || in_str {
            continue;
        }
        let mut candidate = prefix.to_string();
        while let Some(closer) = stack.pop() {
            candidate.push(closer);
        }
        if let Ok(v) = serde_json::from_str::<Value>(&candidate) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}
