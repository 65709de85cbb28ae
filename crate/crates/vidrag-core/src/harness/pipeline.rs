//! End-to-end execution of the four pipeline stages over one video.

use crate::composer::{compose_context, ComposedContext, FrameBudget};
use crate::config::PipelineConfig;
use crate::embedindex::{build_index, build_subtitle_index};
use crate::error::{Error, Result};
use crate::memory::{
    build_memory, reason_clues, ClueSet, MemoryContext, ProjectionPair, TokenEmbedding,
    TokenOrigin,
};
use crate::retriever::{
    clue_union_retrieve, ChannelSet, MomentCorpus, RetrievalRequest, RetrievalResult,
    SubtitleCorpus,
};
use crate::segmenter::{
    group_subtitles_into_spans, moment_caption_text, segment_moments, FrameManifest, Moment,
    SubtitleEntry,
};

/// The reasoning-instruction prompt, shipped as a versioned text asset.
/// Comment lines are metadata and are not tokenized.
const REASONING_INSTRUCTION: &str = include_str!("../../../../config/reasoning_instruction.txt");

/// One video plus its question, ready for the pipeline.
#[derive(Debug, Clone, Copy)]
pub struct VideoInput<'a> {
    pub manifest: &'a FrameManifest,
    pub subtitles: &'a [SubtitleEntry],
    pub question: &'a str,
}

/// Everything the pipeline produced for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub context: ComposedContext,
    pub retrieval: RetrievalResult,
    pub clue_set: ClueSet,
    pub moments: Vec<Moment>,
    pub memory_fingerprint: Option<String>,
}

fn attribute<T>(stage: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{stage}: {msg}")),
        Error::Backend { message, attempts } => Error::Backend {
            message: format!("{stage}: {message}"),
            attempts,
        },
        Error::Protocol(msg) => Error::Protocol(format!("{stage}: {msg}")),
        Error::Schema { message, payload } => Error::Schema {
            message: format!("{stage}: {message}"),
            payload,
        },
        other => other,
    })
}

fn instruction_tokens(
    backend: &crate::embedindex::EmbeddingBackend,
) -> Result<Vec<TokenEmbedding>> {
    let words: Vec<String> = REASONING_INSTRUCTION
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .map(str::to_owned)
        .collect();
    let vectors = backend.embed_texts(&words)?;
    vectors
        .into_iter()
        .map(|v| TokenEmbedding::new(v.values().to_vec(), TokenOrigin::Instruction))
        .collect()
}

/// Down-sample the manifest evenly and embed one visual token per frame.
/// A frame contributes its precomputed embedding when the dimension fits,
/// otherwise its caption, otherwise a constant placeholder.
fn visual_tokens(
    manifest: &FrameManifest,
    memory_frames: usize,
    embed_dim: usize,
    backend: &crate::embedindex::EmbeddingBackend,
) -> Result<Vec<TokenEmbedding>> {
    let n = manifest.frames.len();
    let count = memory_frames.min(n);
    let sampled: Vec<&crate::segmenter::FrameRef> =
        (0..count).map(|i| &manifest.frames[i * n / count]).collect();
    let mut tokens = Vec::with_capacity(count);
    let mut texts: Vec<String> = Vec::new();
    let mut text_slots: Vec<usize> = Vec::new();
    for (slot, frame) in sampled.iter().enumerate() {
        if let Some(embedding) = &frame.embedding {
            if embedding.len() == embed_dim {
                tokens.push(Some(TokenEmbedding::new(
                    embedding.clone(),
                    TokenOrigin::Visual,
                )?));
                continue;
            }
        }
        let text = match &frame.caption {
            Some(c) if !c.trim().is_empty() => c.clone(),
            _ => "unlabeled frame".to_string(),
        };
        texts.push(text);
        text_slots.push(slot);
        tokens.push(None);
    }
    if !texts.is_empty() {
        let vectors = backend.embed_texts(&texts)?;
        for (slot, vector) in text_slots.into_iter().zip(vectors) {
            tokens[slot] = Some(TokenEmbedding::new(
                vector.values().to_vec(),
                TokenOrigin::Visual,
            )?);
        }
    }
    Ok(tokens.into_iter().map(|t| t.expect("slot filled")).collect())
}

/// Run memorize → reason → retrieve → compose for one input.
///
/// Ablations: `disable_memory` retrieves with the question alone;
/// `disable_reasoning` keeps the memory but retrieves with the question
/// plus the reasoner's draft answer, discarding its clues.
pub fn run_pipeline(input: &VideoInput, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let embed_backend = config.embedding_backend();

    // Stage boundaries follow the four-step flow; each stage attributes its
    // errors so a failed remote call names the stage that issued it.
    let moments = attribute(
        "segment",
        segment_moments(input.manifest, config.moment_duration_s),
    )?;
    let moment_texts: Vec<String> = moments
        .iter()
        .map(|m| moment_caption_text(m, input.manifest))
        .collect();

    let mut memory_fingerprint = None;
    let (clue_set, include_draft) = if config.disable_memory {
        let questions_only = ClueSet::new(
            vec![input.question.to_string()],
            input.question.to_string(),
            input.question.to_string(),
        )?;
        (questions_only, false)
    } else {
        let summary = moment_texts
            .iter()
            .filter(|t| !t.is_empty())
            .cloned()
            .collect::<Vec<_>>()
            .join("\n");
        let instr = attribute("memorize", instruction_tokens(&embed_backend))?;
        let visual = attribute(
            "memorize",
            visual_tokens(
                input.manifest,
                config.memory_frames,
                config.embed_dim,
                &embed_backend,
            ),
        )?;
        let proj = ProjectionPair::seeded(
            config.embed_dim,
            config.embed_dim,
            config.embed_dim,
            config.seed,
        )?;
        let cache = attribute("memorize", build_memory(&instr, &visual, &proj))?;
        let fingerprint = cache.fingerprint();
        let memctx = MemoryContext::new(summary, fingerprint.clone());
        memory_fingerprint = Some(fingerprint);

        let reasoned = attribute(
            "reason",
            reason_clues(
                &config.reasoner_backend(),
                &memctx,
                input.question,
                config.num_clues,
            ),
        )?;
        if config.disable_reasoning {
            let draft_only = ClueSet::new(
                vec![input.question.to_string()],
                reasoned.draft_answer,
                input.question.to_string(),
            )?;
            (draft_only, true)
        } else {
            (reasoned, config.include_draft)
        }
    };

    let build = attribute("retrieve", build_index(&moments, &moment_texts, &embed_backend))?;
    let spans = group_subtitles_into_spans(input.subtitles, &moments);
    let subtitle_index = if spans.is_empty() {
        None
    } else {
        Some(attribute(
            "retrieve",
            build_subtitle_index(&spans, &embed_backend),
        )?)
    };

    let request = RetrievalRequest {
        clue_set: clue_set.clone(),
        k_per_query: config.k_per_query,
        channels: ChannelSet::all(),
        include_draft,
    };
    let moment_corpus = MomentCorpus {
        index: &build.index,
        moments: &moments,
    };
    let subtitle_corpus = subtitle_index.as_ref().map(|index| SubtitleCorpus {
        index,
        spans: &spans,
    });
    let retrieval = attribute(
        "retrieve",
        clue_union_retrieve(
            &request,
            &moment_corpus,
            subtitle_corpus.as_ref(),
            &embed_backend,
        ),
    )?;

    let budget = FrameBudget {
        total_frames: config.frame_budget,
        alpha: config.alpha,
        fps_in_moment: config.fps_in_moment,
        backfill: config.backfill,
    };
    let context = attribute(
        "compose",
        compose_context(&retrieval, input.manifest, &moments, &budget, input.question),
    )?;

    Ok(PipelineOutput {
        context,
        retrieval,
        clue_set,
        moments,
        memory_fingerprint,
    })
}

/// The uniform-sampling baseline: no retrieval at all, the whole budget
/// spent on evenly spaced frames.
pub fn run_uniform_baseline(input: &VideoInput, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let moments = segment_moments(input.manifest, config.moment_duration_s)?;
    let budget = FrameBudget {
        total_frames: config.frame_budget,
        alpha: 0.0,
        fps_in_moment: config.fps_in_moment,
        backfill: config.backfill,
    };
    let retrieval = RetrievalResult::empty();
    let context = compose_context(&retrieval, input.manifest, &moments, &budget, input.question)?;
    let clue_set = ClueSet::new(
        vec![input.question.to_string()],
        input.question.to_string(),
        input.question.to_string(),
    )?;
    Ok(PipelineOutput {
        context,
        retrieval,
        clue_set,
        moments,
        memory_fingerprint: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{generate_synthetic, DistractorProfile};

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            memory_frames: 16,
            embed_dim: 32,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn full_pipeline_retrieves_planted_moments_without_distractors() {
        let cases = generate_synthetic(42, 3, DistractorProfile::None).unwrap();
        for case in &cases {
            let input = VideoInput {
                manifest: &case.manifest,
                subtitles: &case.subtitles,
                question: &case.question,
            };
            let output = run_pipeline(&input, &small_config()).unwrap();
            let retrieved: std::collections::BTreeSet<u64> =
                output.retrieval.retrieved_moment_ids().into_iter().collect();
            for planted in &case.planted_moment_ids {
                assert!(
                    retrieved.contains(planted),
                    "{}: planted {planted} missing from {retrieved:?}",
                    case.case_id
                );
            }
            assert!(output.memory_fingerprint.is_some());
            assert!(output.context.frames.len() <= 128);
        }
    }

    #[test]
    fn disable_memory_recall_never_exceeds_full_recall() {
        let cases = generate_synthetic(43, 4, DistractorProfile::Paraphrase).unwrap();
        let config = small_config();
        let ablated = PipelineConfig {
            disable_memory: true,
            ..config.clone()
        };
        for case in &cases {
            let input = VideoInput {
                manifest: &case.manifest,
                subtitles: &case.subtitles,
                question: &case.question,
            };
            let full = run_pipeline(&input, &config).unwrap();
            let memless = run_pipeline(&input, &ablated).unwrap();
            let recall = |output: &PipelineOutput| {
                let retrieved: std::collections::BTreeSet<u64> =
                    output.retrieval.retrieved_moment_ids().into_iter().collect();
                case.planted_moment_ids.intersection(&retrieved).count() as f64
                    / case.planted_moment_ids.len() as f64
            };
            assert!(recall(&full) >= recall(&memless), "{}", case.case_id);
        }
    }

    #[test]
    fn disable_memory_uses_question_as_only_query() {
        let cases = generate_synthetic(44, 1, DistractorProfile::None).unwrap();
        let case = &cases[0];
        let input = VideoInput {
            manifest: &case.manifest,
            subtitles: &case.subtitles,
            question: &case.question,
        };
        let config = PipelineConfig {
            disable_memory: true,
            ..small_config()
        };
        let output = run_pipeline(&input, &config).unwrap();
        assert_eq!(output.clue_set.clues, vec![case.question.clone()]);
        assert!(output.memory_fingerprint.is_none());
        let queries: std::collections::HashSet<&str> = output
            .retrieval
            .query_log
            .iter()
            .map(|e| e.clue.as_str())
            .collect();
        assert_eq!(queries.len(), 1);
    }

    #[test]
    fn disable_reasoning_uses_question_and_draft() {
        let cases = generate_synthetic(45, 1, DistractorProfile::None).unwrap();
        let case = &cases[0];
        let input = VideoInput {
            manifest: &case.manifest,
            subtitles: &case.subtitles,
            question: &case.question,
        };
        let config = PipelineConfig {
            disable_reasoning: true,
            ..small_config()
        };
        let output = run_pipeline(&input, &config).unwrap();
        assert_eq!(output.clue_set.clues, vec![case.question.clone()]);
        assert!(output.memory_fingerprint.is_some());
        let queries: std::collections::HashSet<&str> = output
            .retrieval
            .query_log
            .iter()
            .map(|e| e.clue.as_str())
            .collect();
        assert_eq!(queries.len(), 2);
    }

    #[test]
    fn empty_subtitle_case_completes_with_no_subtitle_hits() {
        // Case index 6 of any batch is generated without subtitles.
        let cases = generate_synthetic(46, 7, DistractorProfile::None).unwrap();
        let case = &cases[6];
        assert!(case.subtitles.is_empty());
        let input = VideoInput {
            manifest: &case.manifest,
            subtitles: &case.subtitles,
            question: &case.question,
        };
        let output = run_pipeline(&input, &small_config()).unwrap();
        assert!(output.retrieval.subtitle_hits.is_empty());
    }

    #[test]
    fn uniform_baseline_is_all_uniform_and_budgeted() {
        let cases = generate_synthetic(47, 1, DistractorProfile::None).unwrap();
        let case = &cases[0];
        let input = VideoInput {
            manifest: &case.manifest,
            subtitles: &case.subtitles,
            question: &case.question,
        };
        let output = run_uniform_baseline(&input, &small_config()).unwrap();
        assert_eq!(output.context.frames.len(), 128);
        assert!(output
            .context
            .frames
            .iter()
            .all(|f| f.source == crate::composer::FrameSource::Uniform));
        assert!(output.retrieval.moment_hits.is_empty());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let cases = generate_synthetic(48, 1, DistractorProfile::Paraphrase).unwrap();
        let case = &cases[0];
        let input = VideoInput {
            manifest: &case.manifest,
            subtitles: &case.subtitles,
            question: &case.question,
        };
        let a = run_pipeline(&input, &small_config()).unwrap();
        let b = run_pipeline(&input, &small_config()).unwrap();
        assert_eq!(a, b);
    }
}
