//! Clue reasoning over a memory snapshot.
//!
//! The reasoner turns (memory, question) into retrieval clues plus a draft
//! answer. The mock backend is template-based and fully deterministic; the
//! remote backend speaks `POST /reason` and receives a textual memory
//! summary, since raw KV tensors are not wire-transportable here.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedindex::DEFAULT_MAX_ATTEMPTS;
use crate::error::{Error, Result};
use crate::text::{is_stopword, stable_hash64, tokenize};

/// Retrieval clues plus a draft answer for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClueSet {
    pub clues: Vec<String>,
    pub draft_answer: String,
    pub question: String,
}

impl ClueSet {
    pub fn new(clues: Vec<String>, draft_answer: String, question: String) -> Result<Self> {
        if clues.is_empty() {
            return Err(Error::validation("clue set needs at least one clue"));
        }
        if clues.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::validation("clues must be non-empty"));
        }
        if draft_answer.trim().is_empty() {
            return Err(Error::validation("draft answer must be non-empty"));
        }
        Ok(Self {
            clues,
            draft_answer,
            question,
        })
    }

    pub fn num_clues(&self) -> usize {
        self.clues.len()
    }
}

/// What the reasoner sees of the memory: a textual summary and a stable
/// fingerprint of the underlying cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryContext {
    pub summary: String,
    pub fingerprint: String,
}

impl MemoryContext {
    pub fn new(summary: String, fingerprint: String) -> Self {
        Self {
            summary,
            fingerprint,
        }
    }

    /// Context for summaries without a backing cache; the fingerprint is a
    /// hash of the summary text itself.
    pub fn from_summary(summary: String) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(summary.as_bytes());
        let fingerprint = format!("{:x}", hasher.finalize());
        Self {
            summary,
            fingerprint,
        }
    }
}

/// Deterministic template reasoner.
///
/// Emits the question itself, the question stripped to content words, and
/// memory-grounded variants: summary lines ranked by rarity-weighted token
/// overlap with the question. The draft answer echoes the question subject
/// plus the best-matching summary line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockReasoner {
    pub seed: u64,
}

impl MockReasoner {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn reason(&self, memory: &MemoryContext, question: &str, m: usize) -> Result<ClueSet> {
        let stripped = strip_stopwords(question);
        let stripped = if stripped.is_empty() {
            question.to_string()
        } else {
            stripped
        };
        let ranked_units = rank_summary_units(&memory.summary, question, self.seed);

        let mut clues: Vec<String> = Vec::with_capacity(m);
        clues.push(question.to_string());
        if clues.len() < m {
            clues.push(stripped.clone());
        }
        let mut unit_iter = ranked_units.iter();
        while clues.len() < m {
            match unit_iter.next() {
                Some(unit) => clues.push(unit.clone()),
                None => {
                    // Ran out of summary content; derive a focus variant so
                    // the cardinality contract still holds.
                    let idx = clues.len();
                    clues.push(format!("{stripped} detail {idx}"));
                }
            }
        }
        clues.truncate(m);

        let draft_answer = match ranked_units.first() {
            Some(best) => format!("Likely answer: {stripped} — {best}"),
            None => format!("Likely answer: {stripped}"),
        };
        ClueSet::new(clues, draft_answer, question.to_string())
    }
}

fn strip_stopwords(question: &str) -> String {
    tokenize(question)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Rank summary lines by the rarity-weighted overlap of their tokens with
/// the question's content tokens. Rarity is inverse document frequency over
/// the summary lines themselves, so a token appearing in a single line
/// outweighs vocabulary shared across the whole video.
fn rank_summary_units(summary: &str, question: &str, seed: u64) -> Vec<String> {
    let units: Vec<&str> = summary
        .lines()
        .map(str::trim)
        .filter(|u| !u.is_empty())
        .collect();
    if units.is_empty() {
        return Vec::new();
    }
    let unit_tokens: Vec<Vec<String>> = units.iter().map(|u| tokenize(u)).collect();
    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for tokens in &unit_tokens {
        let mut seen = std::collections::HashSet::new();
        for t in tokens {
            if seen.insert(t.as_str()) {
                *doc_freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
    }
    let n = units.len() as f64;
    let question_tokens: std::collections::HashSet<String> =
        tokenize(question).into_iter().collect();
    let mut scored: Vec<(f64, u64, usize)> = unit_tokens
        .iter()
        .enumerate()
        .map(|(i, tokens)| {
            let unique: std::collections::HashSet<&str> =
                tokens.iter().map(String::as_str).collect();
            let score: f64 = unique
                .iter()
                .filter(|t| question_tokens.contains(**t))
                .map(|t| {
                    let df = doc_freq.get(*t).copied().unwrap_or(0) as f64;
                    ((1.0 + n) / (1.0 + df)).ln()
                })
                .sum();
            (score, stable_hash64(seed, units[i]), i)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    scored
        .into_iter()
        .filter(|(score, _, _)| *score > 0.0)
        .map(|(_, _, i)| units[i].to_string())
        .collect()
}

/// Client for a remote reasoning service speaking `POST /reason`.
#[derive(Debug, Clone)]
pub struct RemoteReasoner {
    pub endpoint: String,
    pub timeout: Duration,
    pub max_attempts: usize,
    pub backoff: Duration,
}

impl RemoteReasoner {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(60),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff: Duration::from_millis(100),
        }
    }
}

#[derive(Serialize)]
struct ReasonRequest<'a> {
    question: &'a str,
    memory_summary: &'a str,
    num_clues: usize,
}

#[derive(Deserialize)]
struct ReasonResponse {
    clues: Vec<String>,
    draft_answer: String,
}

/// A clue source: deterministic mock or remote service.
#[derive(Debug, Clone)]
pub enum ReasonerBackend {
    Mock(MockReasoner),
    Remote(RemoteReasoner),
}

impl ReasonerBackend {
    pub fn mock(seed: u64) -> Self {
        ReasonerBackend::Mock(MockReasoner::new(seed))
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        ReasonerBackend::Remote(RemoteReasoner::new(endpoint))
    }
}

/// Produce exactly `m` clues plus a draft answer for `question`.
pub fn reason_clues(
    backend: &ReasonerBackend,
    memory: &MemoryContext,
    question: &str,
    m: usize,
) -> Result<ClueSet> {
    if question.trim().is_empty() {
        return Err(Error::validation("question must be non-empty"));
    }
    if m == 0 {
        return Err(Error::validation("m must be at least 1"));
    }
    match backend {
        ReasonerBackend::Mock(mock) => mock.reason(memory, question, m),
        ReasonerBackend::Remote(remote) => {
            // One schema retry: a service that returned the wrong clue count
            // may be non-deterministic, so ask again exactly once.
            match reason_remote(remote, memory, question, m) {
                Err(Error::Schema { .. }) => reason_remote(remote, memory, question, m),
                other => other,
            }
        }
    }
}

fn reason_remote(
    remote: &RemoteReasoner,
    memory: &MemoryContext,
    question: &str,
    m: usize,
) -> Result<ClueSet> {
    let client = reqwest::blocking::Client::builder()
        .timeout(remote.timeout)
        .build()
        .map_err(|e| Error::Backend {
            message: format!("failed to build http client: {e}"),
            attempts: 0,
        })?;
    let url = format!("{}/reason", remote.endpoint.trim_end_matches('/'));
    let body = serde_json::to_string(&ReasonRequest {
        question,
        memory_summary: &memory.summary,
        num_clues: m,
    })?;
    let payload = crate::embedindex::post_with_retries(
        &client,
        &url,
        &body,
        remote.max_attempts,
        remote.backoff,
    )?;
    let parsed: ReasonResponse = serde_json::from_str(&payload).map_err(|e| Error::Schema {
        message: format!("reason response is not valid JSON: {e}"),
        payload: payload.clone(),
    })?;
    if parsed.clues.len() != m {
        return Err(Error::Schema {
            message: format!("asked for {m} clues, got {}", parsed.clues.len()),
            payload,
        });
    }
    ClueSet::new(parsed.clues, parsed.draft_answer, question.to_string()).map_err(|e| {
        Error::Schema {
            message: e.to_string(),
            payload,
        }
    })
}
