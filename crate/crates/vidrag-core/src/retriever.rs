//! Clue-guided retrieval: per-clue top-k search, union aggregation,
//! deduplication, and temporal reordering.
//!
//! Each query string (the clues, plus the draft answer when enabled)
//! retrieves its own top-k; the result is the union, not a global top-k
//! over pooled scores. Duplicates keep their maximum score and remember
//! every contributing query.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedindex::{topk, EmbeddingBackend, EmbeddingVector, MomentIndex};
use crate::error::{Error, Result};
use crate::memory::ClueSet;
use crate::segmenter::{Moment, SubtitleSpan};

/// Which corpora a retrieval request searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub moments: bool,
    pub subtitles: bool,
}

impl ChannelSet {
    pub fn new(moments: bool, subtitles: bool) -> Result<Self> {
        if !moments && !subtitles {
            return Err(Error::validation("at least one channel must be enabled"));
        }
        Ok(Self { moments, subtitles })
    }

    pub fn all() -> Self {
        Self {
            moments: true,
            subtitles: true,
        }
    }
}

/// One clue-union retrieval request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRequest {
    pub clue_set: ClueSet,
    pub k_per_query: usize,
    pub channels: ChannelSet,
    pub include_draft: bool,
}

impl RetrievalRequest {
    pub fn new(clue_set: ClueSet, k_per_query: usize) -> Result<Self> {
        if k_per_query == 0 {
            return Err(Error::validation("k_per_query must be at least 1"));
        }
        Ok(Self {
            clue_set,
            k_per_query,
            channels: ChannelSet::all(),
            include_draft: true,
        })
    }

    /// The strings actually searched: clues, then the draft when enabled.
    pub fn query_strings(&self) -> Vec<String> {
        let mut queries = self.clue_set.clues.clone();
        if self.include_draft {
            queries.push(self.clue_set.draft_answer.clone());
        }
        queries
    }
}

/// A deduplicated moment hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentHit {
    pub moment_id: u64,
    pub best_score: f64,
    /// Indexes into the request's query strings that retrieved this moment.
    pub contributing_clues: Vec<usize>,
}

/// A deduplicated subtitle-span hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleHit {
    pub span: SubtitleSpan,
    pub best_score: f64,
}

/// One row of the per-query ranking log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLogEntry {
    pub query_index: usize,
    pub clue: String,
    pub rank: usize,
    pub moment_id: u64,
    pub score: f64,
}

/// Aggregated retrieval output: moment hits in temporal order, subtitle
/// hits in temporal order, and the full per-query ranking log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub moment_hits: Vec<MomentHit>,
    pub subtitle_hits: Vec<SubtitleHit>,
    pub query_log: Vec<QueryLogEntry>,
}

impl RetrievalResult {
    pub fn empty() -> Self {
        Self {
            moment_hits: Vec::new(),
            subtitle_hits: Vec::new(),
            query_log: Vec::new(),
        }
    }

    pub fn retrieved_moment_ids(&self) -> Vec<u64> {
        self.moment_hits.iter().map(|h| h.moment_id).collect()
    }
}

/// A moment index together with the moments it was built from, needed to
/// resolve ids back to start times.
#[derive(Debug, Clone, Copy)]
pub struct MomentCorpus<'a> {
    pub index: &'a MomentIndex,
    pub moments: &'a [Moment],
}

/// A subtitle index together with its spans.
#[derive(Debug, Clone, Copy)]
pub struct SubtitleCorpus<'a> {
    pub index: &'a MomentIndex,
    pub spans: &'a [SubtitleSpan],
}

/// Run every query string's top-k over the enabled channels and aggregate.
pub fn clue_union_retrieve(
    request: &RetrievalRequest,
    moment_corpus: &MomentCorpus,
    subtitle_corpus: Option<&SubtitleCorpus>,
    backend: &EmbeddingBackend,
) -> Result<RetrievalResult> {
    let queries = request.query_strings();
    let query_vectors = backend.embed_texts(&queries)?;
    let mut result = RetrievalResult::empty();

    if request.channels.moments {
        let rankings = per_query_rankings(moment_corpus.index, &query_vectors, request.k_per_query)?;
        for (query_index, ranking) in rankings.iter().enumerate() {
            for (rank, (moment_id, score)) in ranking.iter().enumerate() {
                result.query_log.push(QueryLogEntry {
                    query_index,
                    clue: queries[query_index].clone(),
                    rank: rank + 1,
                    moment_id: *moment_id,
                    score: *score,
                });
            }
        }
        let merged = merge_union(&rankings);
        let ordered = temporal_reorder(
            &merged
                .iter()
                .map(|(id, (score, _))| (*id, *score))
                .collect::<Vec<_>>(),
            moment_corpus.moments,
        )?;
        result.moment_hits = ordered
            .into_iter()
            .map(|(moment_id, best_score)| MomentHit {
                moment_id,
                best_score,
                contributing_clues: merged[&moment_id].1.clone(),
            })
            .collect();
    }

    if request.channels.subtitles {
        if let Some(corpus) = subtitle_corpus {
            result.subtitle_hits =
                subtitle_union(&query_vectors, corpus, request.k_per_query)?;
        }
        // No subtitle corpus: the channel is optional, hits stay empty.
    }

    Ok(result)
}

/// Per-query exact top-k rankings, searched in parallel. Results are
/// collected back in query order, so aggregation is independent of
/// completion order.
fn per_query_rankings(
    index: &MomentIndex,
    queries: &[EmbeddingVector],
    k: usize,
) -> Result<Vec<Vec<(u64, f64)>>> {
    queries
        .par_iter()
        .map(|q| topk(index, q, k))
        .collect::<Result<Vec<_>>>()
}

/// Union per-query rankings, keeping max score and contributing queries.
fn merge_union(rankings: &[Vec<(u64, f64)>]) -> BTreeMap<u64, (f64, Vec<usize>)> {
    let mut merged: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
    for (query_index, ranking) in rankings.iter().enumerate() {
        for (moment_id, score) in ranking {
            merged
                .entry(*moment_id)
                .and_modify(|(best, contributors)| {
                    if *score > *best {
                        *best = *score;
                    }
                    contributors.push(query_index);
                })
                .or_insert((*score, vec![query_index]));
        }
    }
    merged
}

/// Sort hits ascending by their moment's start time, ties by moment_id.
pub fn temporal_reorder(hits: &[(u64, f64)], moments: &[Moment]) -> Result<Vec<(u64, f64)>> {
    let starts: BTreeMap<u64, f64> = moments.iter().map(|m| (m.moment_id, m.start_s)).collect();
    let mut resolved: Vec<(f64, u64, f64)> = Vec::with_capacity(hits.len());
    for (moment_id, score) in hits {
        let start = starts.get(moment_id).ok_or_else(|| {
            Error::validation(format!("unknown moment_id {moment_id} in retrieval hits"))
        })?;
        resolved.push((*start, *moment_id, *score));
    }
    resolved.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(resolved.into_iter().map(|(_, id, score)| (id, score)).collect())
}

/// Union of per-clue top-k subtitle spans, deduplicated and time-ordered.
///
/// Only the clues query here; the draft answer participates when called
/// through [`clue_union_retrieve`] with `include_draft`.
pub fn retrieve_subtitle_spans(
    clue_set: &ClueSet,
    corpus: &SubtitleCorpus,
    k: usize,
    backend: &EmbeddingBackend,
) -> Result<Vec<SubtitleHit>> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    let vectors = backend.embed_texts(&clue_set.clues)?;
    subtitle_union(&vectors, corpus, k)
}

fn subtitle_union(
    queries: &[EmbeddingVector],
    corpus: &SubtitleCorpus,
    k: usize,
) -> Result<Vec<SubtitleHit>> {
    let rankings = per_query_rankings(corpus.index, queries, k)?;
    let merged = merge_union(&rankings);
    let mut hits: Vec<SubtitleHit> = Vec::with_capacity(merged.len());
    for (span_id, (best_score, _)) in merged {
        let span = corpus
            .spans
            .iter()
            .find(|s| s.span_id == span_id)
            .ok_or_else(|| {
                Error::validation(format!("unknown subtitle span id {span_id} in hits"))
            })?;
        hits.push(SubtitleHit {
            span: span.clone(),
            best_score,
        });
    }
    hits.sort_by(|a, b| {
        a.span
            .start_s
            .total_cmp(&b.span.start_s)
            .then_with(|| a.span.span_id.cmp(&b.span.span_id))
    });
    Ok(hits)
}

/// Persist the per-query ranking log, one JSON record per line.
pub fn write_query_log(result: &RetrievalResult, writer: &mut impl Write) -> Result<()> {
    #[derive(Serialize)]
    struct Record<'a> {
        clue: &'a str,
        rank: usize,
        moment_id: u64,
        score: f64,
    }
    for entry in &result.query_log {
        let record = Record {
            clue: &entry.clue,
            rank: entry.rank,
            moment_id: entry.moment_id,
            score: entry.score,
        };
        writeln!(writer, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}
