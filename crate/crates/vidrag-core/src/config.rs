//! Pipeline configuration: defaults, validation, and TOML loading.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedindex::EmbeddingBackend;
use crate::error::{Error, Result};
use crate::memory::ReasonerBackend;

/// Where a neural component lives: the deterministic in-process mock or a
/// remote HTTP service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendSpec {
    Mock,
    Url(String),
}

impl TryFrom<String> for BackendSpec {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        BackendSpec::parse(&value)
    }
}

impl From<BackendSpec> for String {
    fn from(spec: BackendSpec) -> String {
        match spec {
            BackendSpec::Mock => "mock".to_string(),
            BackendSpec::Url(url) => url,
        }
    }
}

impl BackendSpec {
    pub fn parse(value: &str) -> Result<Self> {
        if value == "mock" {
            Ok(BackendSpec::Mock)
        } else if value.starts_with("http://") || value.starts_with("https://") {
            Ok(BackendSpec::Url(value.to_string()))
        } else {
            Err(Error::validation(format!(
                "backend must be \"mock\" or an http(s) URL, got {value:?}"
            )))
        }
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendSpec::Mock => write!(f, "mock"),
            BackendSpec::Url(url) => write!(f, "{url}"),
        }
    }
}

/// Every knob of the four-stage pipeline. Defaults are the reference
/// operating point: 10-second moments, four clues plus a draft, top-4 per
/// query, a 128-frame budget split 0.6/0.4, frames at 1 fps inside moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub moment_duration_s: f64,
    pub num_clues: usize,
    pub k_per_query: usize,
    pub alpha: f64,
    pub frame_budget: usize,
    pub fps_in_moment: f64,
    /// Dimension of embeddings and memory tokens under the mock backends.
    pub embed_dim: usize,
    /// How many frames are down-sampled into the memory cache.
    pub memory_frames: usize,
    pub seed: u64,
    pub backend_embed: BackendSpec,
    pub backend_reason: BackendSpec,
    /// Retrieve with the question only, skipping memory and reasoning.
    pub disable_memory: bool,
    /// Keep memory but retrieve with {question, draft} instead of clues.
    pub disable_reasoning: bool,
    /// Whether the draft answer participates as a retrieval query.
    pub include_draft: bool,
    /// Shift unused retrieved-frame budget to uniform sampling.
    pub backfill: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            moment_duration_s: 10.0,
            num_clues: 4,
            k_per_query: 4,
            alpha: 0.6,
            frame_budget: 128,
            fps_in_moment: 1.0,
            embed_dim: 64,
            memory_frames: 64,
            seed: 0,
            backend_embed: BackendSpec::Mock,
            backend_reason: BackendSpec::Mock,
            disable_memory: false,
            disable_reasoning: false,
            include_draft: true,
            backfill: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.moment_duration_s.is_finite() && self.moment_duration_s > 0.0) {
            return Err(Error::validation("moment_duration_s must be positive"));
        }
        if self.num_clues == 0 {
            return Err(Error::validation("num_clues must be at least 1"));
        }
        if self.k_per_query == 0 {
            return Err(Error::validation("k_per_query must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation("alpha must be in [0, 1]"));
        }
        if self.frame_budget == 0 {
            return Err(Error::validation("frame_budget must be at least 1"));
        }
        if !(self.fps_in_moment.is_finite() && self.fps_in_moment > 0.0) {
            return Err(Error::validation("fps_in_moment must be positive"));
        }
        if self.embed_dim == 0 {
            return Err(Error::validation("embed_dim must be at least 1"));
        }
        if self.memory_frames == 0 {
            return Err(Error::validation("memory_frames must be at least 1"));
        }
        if self.disable_memory && self.disable_reasoning {
            return Err(Error::validation(
                "disable_memory and disable_reasoning are mutually exclusive ablations",
            ));
        }
        Ok(())
    }

    /// Load from a TOML file. Unknown keys are rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let config: PipelineConfig = toml::from_str(&content)
            .map_err(|e| Error::validation(format!("bad config file: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn embedding_backend(&self) -> EmbeddingBackend {
        match &self.backend_embed {
            BackendSpec::Mock => EmbeddingBackend::mock(self.seed, self.embed_dim),
            BackendSpec::Url(url) => EmbeddingBackend::remote(url.clone()),
        }
    }

    pub fn reasoner_backend(&self) -> ReasonerBackend {
        match &self.backend_reason {
            BackendSpec::Mock => ReasonerBackend::mock(self.seed),
            BackendSpec::Url(url) => ReasonerBackend::remote(url.clone()),
        }
    }
}
