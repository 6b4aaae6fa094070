//! Adapter wiring for the four traffic modes.

use std::sync::Arc;

use anyhow::Result;

use compliance_core::adapters::http::{HttpChat, HttpConfig, HttpEmbed, API_KEY_ENV};
use compliance_core::adapters::{
    Cassette, CassetteChat, CassetteEmbed, CassetteMode, ChatClient, ChatTransport, EmbeddingAdapter,
    HashEmbedder, PipelineMock, TaskCatalog,
};

use crate::config::{config_error, AdapterArgs, AdapterMode, Resolved};

pub struct Adapters {
    pub chat: Arc<ChatClient>,
    pub embedder: Arc<dyn EmbeddingAdapter>,
    cassette: Option<Arc<Cassette>>,
}

impl Adapters {
    /// Persist the cassette when recording.
    pub fn flush(&self) -> Result<()> {
        if let Some(cassette) = &self.cassette {
            cassette.flush()?;
        }
        Ok(())
    }
}

fn http_config(resolved: &Resolved) -> HttpConfig {
    let mut http = HttpConfig::default();
    if let Some(url) = &resolved.base_url {
        http.base_url = url.clone();
    }
    if let Some(model) = &resolved.chat_model {
        http.chat_model = model.clone();
    }
    if let Some(model) = &resolved.embed_model {
        http.embed_model = model.clone();
    }
    http
}

pub fn build(args: &AdapterArgs, resolved: &Resolved) -> Result<Adapters> {
    let seed = resolved.pipeline.seed;
    let mut catalog = TaskCatalog::default();
    catalog.set_decoding(resolved.temperature, resolved.max_output_fraction);
    match args.adapter {
        AdapterMode::Mock => Ok(Adapters {
            chat: Arc::new(ChatClient::new(catalog, Arc::new(PipelineMock::new()))),
            embedder: Arc::new(HashEmbedder::new(64, seed)),
            cassette: None,
        }),
        AdapterMode::Replay => {
            let Some(path) = &args.cassette else {
                return Err(config_error("replay mode requires --cassette"));
            };
            let cassette = Cassette::open(CassetteMode::Replay, path)?;
            let chat_transport: Arc<dyn ChatTransport> =
                Arc::new(CassetteChat::replay(cassette.clone()));
            let embedder: Arc<dyn EmbeddingAdapter> =
                Arc::new(CassetteEmbed::replay(cassette.clone()));
            Ok(Adapters {
                chat: Arc::new(ChatClient::new(catalog, chat_transport)),
                embedder,
                cassette: Some(cassette),
            })
        }
        AdapterMode::Record => {
            let Some(path) = &args.cassette else {
                return Err(config_error("record mode requires --cassette"));
            };
            if std::env::var(API_KEY_ENV).is_err() {
                return Err(config_error(format!(
                    "record mode requires live credentials in {API_KEY_ENV}"
                )));
            }
            let cassette = Cassette::open(CassetteMode::Record, path)?;
            let http = http_config(resolved);
            let inner_chat: Arc<dyn ChatTransport> = Arc::new(HttpChat::from_env(http.clone())?);
            let inner_embed: Arc<dyn EmbeddingAdapter> = Arc::new(HttpEmbed::from_env(http)?);
            let chat_transport: Arc<dyn ChatTransport> =
                Arc::new(CassetteChat::record(cassette.clone(), inner_chat));
            let embedder: Arc<dyn EmbeddingAdapter> =
                Arc::new(CassetteEmbed::record(cassette.clone(), inner_embed));
            Ok(Adapters {
                chat: Arc::new(ChatClient::new(catalog, chat_transport)),
                embedder,
                cassette: Some(cassette),
            })
        }
        AdapterMode::Live => {
            let http = http_config(resolved);
            let chat_transport: Arc<dyn ChatTransport> = Arc::new(HttpChat::from_env(http.clone())?);
            let embedder: Arc<dyn EmbeddingAdapter> = Arc::new(HttpEmbed::from_env(http)?);
            Ok(Adapters {
                chat: Arc::new(ChatClient::new(catalog, chat_transport)),
                embedder,
                cassette: None,
            })
        }
    }
}
