//! Embedding vectors and exact cosine top-k search over a moment corpus.
//!
//! Search is exhaustive by design: corpora are at most tens of thousands of
//! moments per video, and exact ranking keeps every oracle test an equality
//! check instead of a recall bound.

mod backend;

pub use backend::{EmbeddingBackend, MockEmbedder, RemoteEmbedder, DEFAULT_MAX_ATTEMPTS};
pub(crate) use backend::post_with_retries;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::{Moment, SubtitleSpan};

/// Fixed-dimension real vector with all-finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("embedding must have positive dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("embedding contains non-finite values"));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scaled copy with unit L2 norm. Errors on the all-zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.l2_norm();
        if norm == 0.0 {
            return Err(Error::validation("cannot normalize a zero vector"));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v / norm).collect(),
        })
    }
}

/// Cosine similarity, clamped to [-1, 1] against round-off.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let norm_a = a.l2_norm();
    let norm_b = b.l2_norm();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::validation(
            "undefined similarity: zero vector has no direction",
        ));
    }
    let dot: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y)
        .sum();
    Ok((dot / (norm_a * norm_b)).clamp(-1.0, 1.0))
}

/// Which corpus an index was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    Moments,
    Subtitles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexEntry {
    moment_id: u64,
    vector: EmbeddingVector,
}

/// Immutable exact-search index over (moment_id, embedding) pairs.
///
/// Vectors are stored L2-normalized so cosine reduces to a dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentIndex {
    entries: Vec<IndexEntry>,
    dim: usize,
    corpus_kind: CorpusKind,
    backend_fingerprint: String,
}

impl MomentIndex {
    /// Build an index from raw pairs. Vectors are normalized on the way in;
    /// ids must be unique and dimensions consistent.
    pub fn from_entries(
        pairs: Vec<(u64, EmbeddingVector)>,
        corpus_kind: CorpusKind,
        backend_fingerprint: String,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::validation("empty corpus"));
        }
        let dim = pairs[0].1.dim();
        let mut seen = std::collections::HashSet::new();
        let mut entries = Vec::with_capacity(pairs.len());
        for (moment_id, vector) in pairs {
            if vector.dim() != dim {
                return Err(Error::validation(format!(
                    "index entry {} has dim {}, expected {}",
                    moment_id,
                    vector.dim(),
                    dim
                )));
            }
            if !seen.insert(moment_id) {
                return Err(Error::validation(format!(
                    "duplicate moment_id {moment_id} in index"
                )));
            }
            entries.push(IndexEntry {
                moment_id,
                vector: vector.normalized()?,
            });
        }
        Ok(Self {
            entries,
            dim,
            corpus_kind,
            backend_fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn corpus_kind(&self) -> CorpusKind {
        self.corpus_kind
    }

    pub fn backend_fingerprint(&self) -> &str {
        &self.backend_fingerprint
    }

    pub fn moment_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.moment_id)
    }
}

/// Exact top-k by cosine similarity, ties broken by smaller moment_id.
///
/// Returns `min(k, |index|)` entries; an empty result only when the index
/// is empty (which `MomentIndex` construction forbids, but persisted files
/// are re-validated).
pub fn topk(index: &MomentIndex, query: &EmbeddingVector, k: usize) -> Result<Vec<(u64, f64)>> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if query.dim() != index.dim {
        return Err(Error::validation(format!(
            "query dim {} does not match index dim {}",
            query.dim(),
            index.dim
        )));
    }
    let query = query.normalized()?;
    let mut scored: Vec<(u64, f64)> = index
        .entries
        .iter()
        .map(|e| {
            let dot: f64 = e
                .vector
                .values
                .iter()
                .zip(query.values())
                .map(|(x, y)| x * y)
                .sum();
            (e.moment_id, dot.clamp(-1.0, 1.0))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Outcome of an index build: the index plus anything worth flagging.
#[derive(Debug, Clone)]
pub struct IndexBuild {
    pub index: MomentIndex,
    pub report: BuildReport,
}

/// Build-time diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Moments whose representative text was empty and were indexed under a
    /// placeholder token instead.
    pub placeholder_moment_ids: Vec<u64>,
}

const PLACEHOLDER_TEXT: &str = "untexted moment";

/// Embed one representative text per moment and assemble the index.
pub fn build_index(
    moments: &[Moment],
    texts: &[String],
    backend: &EmbeddingBackend,
) -> Result<IndexBuild> {
    if moments.is_empty() {
        return Err(Error::validation("empty corpus"));
    }
    if moments.len() != texts.len() {
        return Err(Error::validation(format!(
            "{} moments but {} texts",
            moments.len(),
            texts.len()
        )));
    }
    let mut report = BuildReport::default();
    let effective: Vec<String> = moments
        .iter()
        .zip(texts)
        .map(|(m, t)| {
            if crate::text::tokenize(t).is_empty() {
                report.placeholder_moment_ids.push(m.moment_id);
                PLACEHOLDER_TEXT.to_string()
            } else {
                t.clone()
            }
        })
        .collect();
    let vectors = backend.embed_texts(&effective)?;
    let pairs = moments
        .iter()
        .map(|m| m.moment_id)
        .zip(vectors)
        .collect::<Vec<_>>();
    let index = MomentIndex::from_entries(pairs, CorpusKind::Moments, backend.fingerprint())?;
    Ok(IndexBuild { index, report })
}

/// Index subtitle spans under their window ids.
pub fn build_subtitle_index(
    spans: &[SubtitleSpan],
    backend: &EmbeddingBackend,
) -> Result<MomentIndex> {
    if spans.is_empty() {
        return Err(Error::validation("empty corpus"));
    }
    let texts: Vec<String> = spans.iter().map(|s| s.text.clone()).collect();
    let vectors = backend.embed_texts(&texts)?;
    let pairs = spans
        .iter()
        .map(|s| s.span_id)
        .zip(vectors)
        .collect::<Vec<_>>();
    MomentIndex::from_entries(pairs, CorpusKind::Subtitles, backend.fingerprint())
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexHeader {
    version: u32,
    dim: usize,
    corpus_kind: CorpusKind,
    backend_fingerprint: String,
    entries: usize,
}

const INDEX_FORMAT_VERSION: u32 = 1;

/// Persist an index: a JSON header line followed by one entry per line.
pub fn save_index(index: &MomentIndex, writer: &mut impl Write) -> Result<()> {
    let header = IndexHeader {
        version: INDEX_FORMAT_VERSION,
        dim: index.dim,
        corpus_kind: index.corpus_kind,
        backend_fingerprint: index.backend_fingerprint.clone(),
        entries: index.entries.len(),
    };
    writeln!(writer, "{}", serde_json::to_string(&header)?)?;
    for entry in &index.entries {
        writeln!(writer, "{}", serde_json::to_string(entry)?)?;
    }
    Ok(())
}

/// Load an index persisted by [`save_index`], re-validating invariants.
pub fn load_index(path: &Path) -> Result<MomentIndex> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut header_line = String::new();
    reader.read_line(&mut header_line)?;
    let header: IndexHeader = serde_json::from_str(header_line.trim()).map_err(|e| Error::Parse {
        line: 1,
        message: format!("bad index header: {e}"),
    })?;
    if header.version != INDEX_FORMAT_VERSION {
        return Err(Error::validation(format!(
            "unsupported index version {}",
            header.version
        )));
    }
    let mut pairs = Vec::with_capacity(header.entries);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: IndexEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 2,
            message: e.to_string(),
        })?;
        pairs.push((entry.moment_id, entry.vector));
    }
    if pairs.len() != header.entries {
        return Err(Error::validation(format!(
            "index header promises {} entries, file has {}",
            header.entries,
            pairs.len()
        )));
    }
    MomentIndex::from_entries(pairs, header.corpus_kind, header.backend_fingerprint)
}
