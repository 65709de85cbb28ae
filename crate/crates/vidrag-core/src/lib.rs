//! # vidrag-core
//!
//! A retrieval-augmentation engine for long-video question answering.
//!
//! The pipeline runs in four stages over a frame manifest and a question:
//!
//! 1. **Memorize** — project instruction and visual token embeddings into an
//!    append-only key/value memory cache.
//! 2. **Reason** — turn the memory plus the question into a set of retrieval
//!    clues and a draft answer.
//! 3. **Retrieve** — run each clue (and optionally the draft) as a top-k
//!    cosine query over a moment index, union and deduplicate the hits, and
//!    reorder them chronologically.
//! 4. **Compose** — split a fixed frame budget between frames sampled from
//!    the retrieved moments and frames sampled uniformly over the whole
//!    video, producing the context handed to a downstream generator.
//!
//! All neural components sit behind pluggable backends: deterministic mocks
//! for desk-scale testing, HTTP services for real embedders and reasoners.
//! The [`harness`] module adds synthetic benchmark generation with planted
//! ground truth, end-to-end evaluation, and the dataset/loss machinery in
//! [`curriculum`] covers next-token-prediction and preference-optimization
//! training data export.

pub mod composer;
pub mod config;
pub mod curriculum;
pub mod embedindex;
pub mod error;
pub mod harness;
pub mod memory;
pub mod retriever;
pub mod segmenter;

mod text;

pub use composer::{ComposedContext, ComposedFrame, FrameBudget, FrameSource, GeneratorPayload};
pub use config::{BackendSpec, PipelineConfig};
pub use curriculum::{DpoInputs, PreferencePair, ScoredClue, TokenProbTable};
pub use embedindex::{CorpusKind, EmbeddingBackend, EmbeddingVector, MomentIndex};
pub use error::{Error, Result};
pub use memory::{ClueSet, MemoryCache, MemoryContext, ProjectionPair, ReasonerBackend, TokenEmbedding};
pub use retriever::{ChannelSet, RetrievalRequest, RetrievalResult};
pub use segmenter::{FrameManifest, FrameRef, Moment, SubtitleEntry, SubtitleSpan};
