//! Reasoning-oriented memory: an append-only key/value cache over projected
//! token embeddings, plus the clue-reasoning interface on top of it.
//!
//! The cache realizes the projection math at desk scale: each token
//! embedding `x` is stored as `(W_k x, W_v x)` with seeded projection
//! matrices. Full-scale reasoning lives behind a backend; the cache here is
//! the substrate the pipeline builds and fingerprints.

mod reasoner;

pub use reasoner::{
    reason_clues, ClueSet, MemoryContext, MockReasoner, ReasonerBackend, RemoteReasoner,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Where a token came from in the input sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenOrigin {
    Instruction,
    Visual,
    Question,
}

/// One input token embedding of model dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbedding {
    pub values: Vec<f64>,
    pub origin: TokenOrigin,
}

impl TokenEmbedding {
    pub fn new(values: Vec<f64>, origin: TokenOrigin) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(
                "token embedding must be non-empty and finite",
            ));
        }
        Ok(Self { values, origin })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Seeded key/value projection matrices, fixed after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    w_k: Vec<Vec<f64>>,
    w_v: Vec<Vec<f64>>,
    input_dim: usize,
    pub seed: u64,
}

impl ProjectionPair {
    /// Sample both matrices from a ChaCha stream keyed by `seed`. Entries
    /// are uniform in `[-1/sqrt(d), 1/sqrt(d)]` so projected vectors stay at
    /// the same scale as the inputs.
    pub fn seeded(input_dim: usize, key_dim: usize, value_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || key_dim == 0 || value_dim == 0 {
            return Err(Error::validation("projection dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        let mut sample = |rows: usize| -> Vec<Vec<f64>> {
            (0..rows)
                .map(|_| (0..input_dim).map(|_| rng.gen_range(-scale..scale)).collect())
                .collect()
        };
        let w_k = sample(key_dim);
        let w_v = sample(value_dim);
        Ok(Self {
            w_k,
            w_v,
            input_dim,
            seed,
        })
    }

    /// Identity projections (`d_k = d_v = d`), handy for tests.
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("projection dimensions must be positive"));
        }
        let eye: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(Self {
            w_k: eye.clone(),
            w_v: eye,
            input_dim: dim,
            seed: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn key_dim(&self) -> usize {
        self.w_k.len()
    }

    pub fn value_dim(&self) -> usize {
        self.w_v.len()
    }

    pub fn key_matrix(&self) -> &[Vec<f64>] {
        &self.w_k
    }

    pub fn value_matrix(&self) -> &[Vec<f64>] {
        &self.w_v
    }

    fn project(&self, token: &TokenEmbedding) -> Result<(Vec<f64>, Vec<f64>)> {
        if token.dim() != self.input_dim {
            return Err(Error::validation(format!(
                "token dim {} does not match projection input dim {}",
                token.dim(),
                self.input_dim
            )));
        }
        Ok((
            matvec(&self.w_k, &token.values),
            matvec(&self.w_v, &token.values),
        ))
    }
}

fn matvec(matrix: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    matrix
        .iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Append-only sequence of projected (key, value) pairs.
///
/// Length never decreases; the only mutation is [`MemoryCache::append`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryCache {
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

impl MemoryCache {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[Vec<f64>] {
        &self.keys
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Project and append new tokens, leaving existing entries untouched.
    pub fn append(&mut self, tokens: &[TokenEmbedding], proj: &ProjectionPair) -> Result<()> {
        for token in tokens {
            let (k, v) = proj.project(token)?;
            self.keys.push(k);
            self.values.push(v);
        }
        Ok(())
    }

    /// Stable content hash: equal caches always hash equal, and any single
    /// entry change flips the digest.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.keys.len() as u64).to_le_bytes());
        for (key, value) in self.keys.iter().zip(&self.values) {
            hasher.update((key.len() as u64).to_le_bytes());
            for x in key {
                hasher.update(x.to_le_bytes());
            }
            hasher.update((value.len() as u64).to_le_bytes());
            for x in value {
                hasher.update(x.to_le_bytes());
            }
        }
        format!("{:x}", hasher.finalize())
    }
}

/// Build a memory cache from instruction tokens followed by visual tokens.
///
/// The cache ends up with `p + T*K` entries, one per token, where entry `t`
/// holds `(W_k x_t, W_v x_t)`.
pub fn build_memory(
    instruction_tokens: &[TokenEmbedding],
    visual_tokens: &[TokenEmbedding],
    proj: &ProjectionPair,
) -> Result<MemoryCache> {
    if visual_tokens.is_empty() {
        return Err(Error::validation("no video content"));
    }
    let mut cache = MemoryCache {
        keys: Vec::with_capacity(instruction_tokens.len() + visual_tokens.len()),
        values: Vec::with_capacity(instruction_tokens.len() + visual_tokens.len()),
    };
    cache.append(instruction_tokens, proj)?;
    cache.append(visual_tokens, proj)?;
    Ok(cache)
}

/// Standalone form of [`MemoryCache::append`] returning the grown cache.
pub fn append_memory(
    mut cache: MemoryCache,
    new_tokens: &[TokenEmbedding],
    proj: &ProjectionPair,
) -> Result<MemoryCache> {
    cache.append(new_tokens, proj)?;
    Ok(cache)
}

/// Stable content hash for a cache; see [`MemoryCache::fingerprint`].
pub fn memory_fingerprint(cache: &MemoryCache) -> String {
    cache.fingerprint()
}
