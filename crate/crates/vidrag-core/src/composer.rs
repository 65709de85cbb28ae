//! Frame-budget composition: allocate the budget between retrieved moments
//! and uniform global sampling, then assemble the generator input.
//!
//! `alpha` is the fraction of the budget given to frames from retrieved
//! moments, rounded half-up; the remainder is sampled uniformly over the
//! whole timeline. A frame picked by both channels counts once, attributed
//! to the retrieved channel.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retriever::RetrievalResult;
use crate::segmenter::{sample_frames_in_moment, FrameManifest, FrameRef, Moment};

/// How the downstream frame budget is split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBudget {
    pub total_frames: usize,
    pub alpha: f64,
    pub fps_in_moment: f64,
    /// When retrieved moments supply fewer frames than their quota, shift
    /// the surplus to uniform sampling instead of wasting it.
    #[serde(default = "default_backfill")]
    pub backfill: bool,
}

fn default_backfill() -> bool {
    true
}

impl FrameBudget {
    pub fn new(total_frames: usize, alpha: f64, fps_in_moment: f64) -> Result<Self> {
        if total_frames == 0 {
            return Err(Error::validation("frame budget must be at least 1"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::validation(format!(
                "alpha must be in [0, 1], got {alpha}"
            )));
        }
        if !(fps_in_moment.is_finite() && fps_in_moment > 0.0) {
            return Err(Error::validation(format!(
                "fps_in_moment must be positive, got {fps_in_moment}"
            )));
        }
        Ok(Self {
            total_frames,
            alpha,
            fps_in_moment,
            backfill: true,
        })
    }
}

/// Split the budget: retrieved quota is `alpha * total` rounded half-up,
/// uniform quota is the exact remainder.
pub fn allocate_budget(budget: &FrameBudget) -> (usize, usize) {
    let retrieved = ((budget.alpha * budget.total_frames as f64) + 0.5).floor() as usize;
    let retrieved = retrieved.min(budget.total_frames);
    (retrieved, budget.total_frames - retrieved)
}

/// Channel a composed frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSource {
    Retrieved,
    Uniform,
}

/// A frame reference in the composed context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposedFrame {
    pub frame_idx: u64,
    pub timestamp_s: f64,
    pub source: FrameSource,
}

/// The assembled generator input: budgeted frames in strict temporal order,
/// subtitle texts, and the question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedContext {
    pub video_id: String,
    pub question: String,
    pub frames: Vec<ComposedFrame>,
    pub subtitle_texts: Vec<String>,
}

/// Build the composed context for one retrieval result.
///
/// Retrieved frames are sampled at `fps_in_moment` from the time-ordered
/// hit moments, evenly strided down to quota when over; uniform frames are
/// drawn from a midpoint grid over the full duration, skipping frames the
/// retrieved channel already took.
pub fn compose_context(
    result: &RetrievalResult,
    manifest: &FrameManifest,
    moments: &[Moment],
    budget: &FrameBudget,
    question: &str,
) -> Result<ComposedContext> {
    if manifest.frames.is_empty() {
        return Err(Error::validation("empty manifest"));
    }
    let (retrieved_quota, uniform_quota) = allocate_budget(budget);

    let mut candidates: Vec<&FrameRef> = Vec::new();
    let mut seen = HashSet::new();
    for hit in &result.moment_hits {
        let moment = moments
            .iter()
            .find(|m| m.moment_id == hit.moment_id)
            .ok_or_else(|| {
                Error::validation(format!("hit references unknown moment {}", hit.moment_id))
            })?;
        for frame in sample_frames_in_moment(moment, manifest, budget.fps_in_moment)? {
            if seen.insert(frame.frame_idx) {
                let stored = manifest
                    .frame(frame.frame_idx)
                    .expect("sampled frame exists in manifest");
                candidates.push(stored);
            }
        }
    }

    let retrieved: Vec<&FrameRef> = if candidates.len() > retrieved_quota {
        evenly_strided(&candidates, retrieved_quota)
    } else {
        candidates
    };

    let uniform_quota = if budget.backfill {
        budget.total_frames - retrieved.len()
    } else {
        uniform_quota
    };

    let mut taken: HashSet<u64> = retrieved.iter().map(|f| f.frame_idx).collect();
    let mut uniform: Vec<&FrameRef> = Vec::new();
    if uniform_quota > 0 {
        for j in 0..uniform_quota {
            let target = (j as f64 + 0.5) * manifest.duration_s / uniform_quota as f64;
            let frame = nearest_frame(&manifest.frames, target);
            if taken.insert(frame.frame_idx) {
                uniform.push(frame);
            }
        }
    }

    let mut frames: Vec<ComposedFrame> = retrieved
        .iter()
        .map(|f| ComposedFrame {
            frame_idx: f.frame_idx,
            timestamp_s: f.timestamp_s,
            source: FrameSource::Retrieved,
        })
        .chain(uniform.iter().map(|f| ComposedFrame {
            frame_idx: f.frame_idx,
            timestamp_s: f.timestamp_s,
            source: FrameSource::Uniform,
        }))
        .collect();
    frames.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));

    Ok(ComposedContext {
        video_id: manifest.video_id.clone(),
        question: question.to_string(),
        frames,
        subtitle_texts: result
            .subtitle_hits
            .iter()
            .map(|h| h.span.text.clone())
            .collect(),
    })
}

/// Keep exactly `quota` entries at even index strides, order-preserving.
/// Index `i` of the output takes input index `floor(i * n / quota)`.
fn evenly_strided<'a>(candidates: &[&'a FrameRef], quota: usize) -> Vec<&'a FrameRef> {
    if quota == 0 {
        return Vec::new();
    }
    let n = candidates.len();
    (0..quota).map(|i| candidates[i * n / quota]).collect()
}

/// Nearest frame by timestamp; ties go to the earlier frame. Frames are
/// sorted by timestamp, so a binary search brackets the target.
fn nearest_frame(frames: &[FrameRef], target: f64) -> &FrameRef {
    let right = frames.partition_point(|f| f.timestamp_s < target);
    if right == 0 {
        return &frames[0];
    }
    if right == frames.len() {
        return &frames[frames.len() - 1];
    }
    let before = &frames[right - 1];
    let after = &frames[right];
    if (target - before.timestamp_s) <= (after.timestamp_s - target) {
        before
    } else {
        after
    }
}

/// Wire form of a composed context, consumed by an external generator
/// service or the harness's mock generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorPayload {
    pub video_id: String,
    pub question: String,
    pub frames: Vec<ComposedFrame>,
    pub subtitles: Vec<String>,
}

impl From<&ComposedContext> for GeneratorPayload {
    fn from(ctx: &ComposedContext) -> Self {
        Self {
            video_id: ctx.video_id.clone(),
            question: ctx.question.clone(),
            frames: ctx.frames.clone(),
            subtitles: ctx.subtitle_texts.clone(),
        }
    }
}

impl From<GeneratorPayload> for ComposedContext {
    fn from(payload: GeneratorPayload) -> Self {
        Self {
            video_id: payload.video_id,
            question: payload.question,
            frames: payload.frames,
            subtitle_texts: payload.subtitles,
        }
    }
}

/// Serialize a composed context as the generator request record.
pub fn render_generator_payload(ctx: &ComposedContext) -> Result<String> {
    Ok(serde_json::to_string(&GeneratorPayload::from(ctx))?)
}

/// Parse a generator request record back into a composed context.
pub fn parse_generator_payload(json: &str) -> Result<ComposedContext> {
    let payload: GeneratorPayload = serde_json::from_str(json)?;
    Ok(payload.into())
}
