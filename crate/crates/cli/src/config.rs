//! Run configuration: CLI flags mirrored by an optional TOML/JSON config
//! file. File values override flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use compliance_core::pipeline::PipelineConfig;
use compliance_core::retrieval::ScoreWeights;

/// Marker for mutually inconsistent flags/modes (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(message.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AdapterMode {
    Mock,
    Replay,
    Record,
    Live,
}

/// Knob overlay loaded from `--config`; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub k: Option<usize>,
    pub k1: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub beta: Option<f64>,
    pub radius: Option<usize>,
    pub w_ent: Option<f64>,
    pub w_hyp: Option<f64>,
    pub w_bonus: Option<f64>,
    pub batch_size: Option<usize>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub meta_gating: Option<bool>,
    pub use_cross_scorer: Option<bool>,
    pub premise_keywords: Option<Vec<String>>,
    pub temperature: Option<f64>,
    pub max_output_fraction: Option<f64>,
    pub base_url: Option<String>,
    pub chat_model: Option<String>,
    pub embed_model: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).with_context(|| "invalid JSON config")?
        } else {
            toml::from_str(&raw).with_context(|| "invalid TOML config")?
        };
        Ok(parsed)
    }
}

/// Shared pipeline knobs as CLI flags; paper-sourced defaults where cited in
/// the module docs, otherwise the crate defaults.
#[derive(Debug, clap::Args, Clone)]
pub struct KnobArgs {
    /// Plan size per anchor.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Preselection pool size.
    #[arg(long, default_value_t = 50)]
    pub k1: usize,
    /// Hypernyms retained per entity.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Policy fragments consulted per entity.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// STRONG hypernym bonus.
    #[arg(long, default_value_t = 0.3)]
    pub beta: f64,
    /// Evidence window hops.
    #[arg(long, default_value_t = 1)]
    pub radius: usize,
    /// Bi-encoder entity-term weight.
    #[arg(long, default_value_t = 0.6)]
    pub w_ent: f64,
    /// Bi-encoder hypernym-term weight.
    #[arg(long, default_value_t = 0.3)]
    pub w_hyp: f64,
    /// Bi-encoder token-overlap bonus weight.
    #[arg(long, default_value_t = 0.1)]
    pub w_bonus: f64,
    /// Items per extraction/reference batch.
    #[arg(long, default_value_t = 8)]
    pub batch_size: usize,
    /// Concurrent adapter calls.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for mock embeddings and noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disable meta-unit scope gating.
    #[arg(long)]
    pub no_meta_gating: bool,
    /// Disable cross-scorer reranking (degraded bi-encoder order).
    #[arg(long)]
    pub no_rerank: bool,
    /// Premise article title keywords (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub premise_keywords: Vec<String>,
    /// Config file overriding these flags (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully merged run configuration.
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub premise_keywords: Vec<String>,
    pub temperature: Option<f64>,
    pub max_output_fraction: Option<f64>,
    pub base_url: Option<String>,
    pub chat_model: Option<String>,
    pub embed_model: Option<String>,
}

impl KnobArgs {
    /// Flags merged with the config file (file wins).
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let pipeline = PipelineConfig {
            k: file.k.unwrap_or(self.k),
            k1: file.k1.unwrap_or(self.k1),
            n: file.n.unwrap_or(self.n),
            m: file.m.unwrap_or(self.m),
            beta: file.beta.unwrap_or(self.beta),
            radius: file.radius.unwrap_or(self.radius),
            weights: ScoreWeights {
                w_ent: file.w_ent.unwrap_or(self.w_ent),
                w_hyp: file.w_hyp.unwrap_or(self.w_hyp),
                w_bonus: file.w_bonus.unwrap_or(self.w_bonus),
            },
            batch_size: file.batch_size.unwrap_or(self.batch_size),
            jobs: file.jobs.unwrap_or(self.jobs),
            seed: file.seed.unwrap_or(self.seed),
            meta_gating: file.meta_gating.unwrap_or(!self.no_meta_gating),
            use_cross_scorer: file.use_cross_scorer.unwrap_or(!self.no_rerank),
        };
        validate(&pipeline)?;
        Ok(Resolved {
            pipeline,
            premise_keywords: file
                .premise_keywords
                .unwrap_or_else(|| self.premise_keywords.clone()),
            temperature: file.temperature,
            max_output_fraction: file.max_output_fraction,
            base_url: file.base_url,
            chat_model: file.chat_model,
            embed_model: file.embed_model,
        })
    }
}

fn validate(config: &PipelineConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&config.beta) {
        return Err(config_error(format!("beta must lie in [0, 1], got {}", config.beta)));
    }
    if config.k == 0 || config.k1 == 0 || config.batch_size == 0 || config.jobs == 0 {
        return Err(config_error("k, k1, batch-size, and jobs must be positive"));
    }
    for (name, w) in [
        ("w-ent", config.weights.w_ent),
        ("w-hyp", config.weights.w_hyp),
        ("w-bonus", config.weights.w_bonus),
    ] {
        if !w.is_finite() {
            return Err(config_error(format!("{name} must be finite, got {w}")));
        }
    }
    Ok(())
}

/// Adapter wiring shared across commands.
#[derive(Debug, clap::Args, Clone)]
pub struct AdapterArgs {
    /// Model traffic mode.
    #[arg(long, value_enum, default_value_t = AdapterMode::Mock)]
    pub adapter: AdapterMode,
    /// Cassette file (required for replay/record).
    #[arg(long)]
    pub cassette: Option<PathBuf>,
}
