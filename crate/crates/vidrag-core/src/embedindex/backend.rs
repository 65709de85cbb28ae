//! Embedding backends: a seeded deterministic mock and an HTTP client.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{stable_hash64, tokenize};

use super::EmbeddingVector;

/// Default number of retry attempts for remote calls.
pub const DEFAULT_MAX_ATTEMPTS: usize = 3;

/// Deterministic embedder: each token hashes to a seeded pseudo-random
/// vector, a text embeds to the L2-normalized sum of its token vectors.
/// Same (seed, text) always yields the same vector; texts sharing tokens
/// land near each other, which is all the desk-scale tests need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl MockEmbedder {
    pub fn new(seed: u64, dim: usize) -> Self {
        Self { seed, dim }
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash64(self.seed, token));
        (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::validation(format!(
                "cannot embed text without tokens: {text:?}"
            )));
        }
        let mut sum = vec![0.0; self.dim];
        for token in &tokens {
            for (acc, v) in sum.iter_mut().zip(self.token_vector(token)) {
                *acc += v;
            }
        }
        let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Token vectors cancelling exactly is astronomically unlikely but
            // would otherwise produce an invalid vector.
            return Err(Error::validation("degenerate zero embedding"));
        }
        for v in &mut sum {
            *v /= norm;
        }
        EmbeddingVector::new(sum)
    }
}

/// Client for a remote embedding service speaking `POST /embed`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub endpoint: String,
    pub timeout: Duration,
    pub max_attempts: usize,
    pub backoff: Duration,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff: Duration::from_millis(100),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    inputs: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

/// An embedding source: mock for deterministic tests, remote for real models.
#[derive(Debug, Clone)]
pub enum EmbeddingBackend {
    Mock(MockEmbedder),
    Remote(RemoteEmbedder),
}

impl EmbeddingBackend {
    pub fn mock(seed: u64, dim: usize) -> Self {
        EmbeddingBackend::Mock(MockEmbedder::new(seed, dim))
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        EmbeddingBackend::Remote(RemoteEmbedder::new(endpoint))
    }

    /// Short identity string recorded in index headers so a persisted index
    /// can be matched to the backend that produced it.
    pub fn fingerprint(&self) -> String {
        match self {
            EmbeddingBackend::Mock(m) => format!("mock:seed={}:dim={}", m.seed, m.dim),
            EmbeddingBackend::Remote(r) => format!("remote:{}", r.endpoint),
        }
    }

    /// Embed a batch of texts, one vector per input, order preserved.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        if texts.is_empty() {
            return Err(Error::validation("embed_texts requires at least one text"));
        }
        match self {
            EmbeddingBackend::Mock(m) => texts.iter().map(|t| m.embed_one(t)).collect(),
            EmbeddingBackend::Remote(r) => embed_remote(r, texts),
        }
    }
}

fn embed_remote(remote: &RemoteEmbedder, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
    let client = reqwest::blocking::Client::builder()
        .timeout(remote.timeout)
        .build()
        .map_err(|e| Error::Backend {
            message: format!("failed to build http client: {e}"),
            attempts: 0,
        })?;
    let url = format!("{}/embed", remote.endpoint.trim_end_matches('/'));
    let body = serde_json::to_string(&EmbedRequest { inputs: texts })?;
    let response = post_with_retries(&client, &url, &body, remote.max_attempts, remote.backoff)?;
    let parsed: EmbedResponse = serde_json::from_str(&response)
        .map_err(|e| Error::Protocol(format!("embed response is not valid JSON: {e}")))?;
    if parsed.vectors.len() != texts.len() {
        return Err(Error::Protocol(format!(
            "requested {} embeddings, got {}",
            texts.len(),
            parsed.vectors.len()
        )));
    }
    parsed
        .vectors
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            if values.len() != parsed.dim {
                return Err(Error::Protocol(format!(
                    "vector {} has dim {}, header says {}",
                    i,
                    values.len(),
                    parsed.dim
                )));
            }
            EmbeddingVector::new(values)
        })
        .collect()
}

/// POST a JSON body, retrying transport failures and 5xx responses with
/// exponential backoff. 4xx responses fail immediately: retrying a request
/// the server rejected outright will not change the outcome.
pub(crate) fn post_with_retries(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &str,
    max_attempts: usize,
    backoff: Duration,
) -> Result<String> {
    let max_attempts = max_attempts.max(1);
    let mut last_error = String::new();
    for attempt in 1..=max_attempts {
        if attempt > 1 {
            std::thread::sleep(backoff * 2u32.pow((attempt - 2) as u32));
        }
        let result = client
            .post(url)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send();
        match result {
            Ok(resp) => {
                let status = resp.status();
                let text = resp.text().unwrap_or_default();
                if status.is_success() {
                    return Ok(text);
                }
                last_error = format!("http status {status}: {text}");
                if status.is_client_error() {
                    return Err(Error::Backend {
                        message: last_error,
                        attempts: attempt,
                    });
                }
            }
            Err(e) => {
                last_error = e.to_string();
            }
        }
    }
    Err(Error::Backend {
        message: last_error,
        attempts: max_attempts,
    })
}
