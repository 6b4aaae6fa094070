//! Live HTTP provider mapping (chat-completion-style API).
//!
//! The exact wire format is confined to this module: a JSON POST with
//! `model`, `messages`, `temperature`, and `max_tokens`, reading the reply
//! from `choices[0].message.content`. Embeddings post `model` + `input` and
//! read `data[*].embedding`. The API key comes from the environment; nothing
//! in this crate logs or persists it.

use serde_json::{json, Value};

use crate::error::AdapterError;

use super::{ChatRequest, ChatTransport, EmbeddingAdapter};

/// Environment variable carrying the provider API key.
pub const API_KEY_ENV: &str = "COMPLIANCE_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub chat_model: String,
    pub embed_model: String,
    /// Model context budget used to turn `max_output_fraction` into tokens.
    pub model_capacity_tokens: usize,
    pub timeout_secs: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".to_string(),
            chat_model: "gpt-4.1".to_string(),
            embed_model: "text-embedding-3-large".to_string(),
            model_capacity_tokens: 32_768,
            timeout_secs: 120,
        }
    }
}

pub struct HttpChat {
    config: HttpConfig,
    api_key: String,
}

impl HttpChat {
    /// Build from config, reading the key from [`API_KEY_ENV`].
    pub fn from_env(config: HttpConfig) -> Result<Self, AdapterError> {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| AdapterError::Transport {
            task: "chat".to_string(),
            message: format!("{API_KEY_ENV} is not set"),
        })?;
        Ok(Self { config, api_key })
    }

    fn post(&self, path: &str, body: &Value, task: &str) -> Result<Value, AdapterError> {
        let url = format!("{}{}", self.config.base_url.trim_end_matches('/'), path);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(self.config.timeout_secs)))
            .build()
            .into();
        let mut response = agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| AdapterError::Transport {
                task: task.to_string(),
                message: e.to_string(),
            })?;
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| AdapterError::Transport {
                task: task.to_string(),
                message: format!("unreadable response body: {e}"),
            })
    }
}

impl ChatTransport for HttpChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, AdapterError> {
        let max_tokens =
            (self.config.model_capacity_tokens as f64 * req.max_output_fraction) as usize;
        let body = json!({
            "model": self.config.chat_model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": max_tokens,
            "response_format": {"type": "json_object"},
        });
        let parsed = self.post("/chat/completions", &body, &req.task_id)?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| AdapterError::Transport {
                task: req.task_id.clone(),
                message: "response has no choices[0].message.content".to_string(),
            })
    }
}

pub struct HttpEmbed {
    chat: HttpChat,
}

impl HttpEmbed {
    pub fn from_env(config: HttpConfig) -> Result<Self, AdapterError> {
        Ok(Self {
            chat: HttpChat::from_env(config)?,
        })
    }
}

impl EmbeddingAdapter for HttpEmbed {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, AdapterError> {
        if texts.is_empty() {
            return Err(AdapterError::Embedding(
                "embed() requires a non-empty input list".to_string(),
            ));
        }
        let body = json!({
            "model": self.chat.config.embed_model,
            "input": texts,
        });
        let parsed = self.chat.post("/embeddings", &body, "embed")?;
        let data = parsed["data"]
            .as_array()
            .ok_or_else(|| AdapterError::Embedding("response has no data array".to_string()))?;
        let mut out = Vec::with_capacity(texts.len());
        for item in data {
            let vector: Vec<f64> = item["embedding"]
                .as_array()
                .ok_or_else(|| AdapterError::Embedding("item has no embedding".to_string()))?
                .iter()
                .filter_map(Value::as_f64)
                .collect();
            out.push(normalize(vector));
        }
        if out.len() != texts.len() {
            return Err(AdapterError::Embedding(format!(
                "expected {} vectors, got {}",
                texts.len(),
                out.len()
            )));
        }
        Ok(out)
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    v
}
