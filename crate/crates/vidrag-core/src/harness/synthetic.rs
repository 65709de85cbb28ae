//! Synthetic long-video cases with planted evidence.
//!
//! Each case is a 30–60 minute timeline whose captions are built from a
//! small common vocabulary, with one evidence phrase (containing a
//! case-unique keyword) planted into a few moments. Because the evidence
//! location is known exactly, retrieval recall and answer accuracy are
//! checkable without any real model.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::{FrameManifest, FrameRef, SubtitleEntry};

/// How non-evidence captions relate to the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorProfile {
    /// All non-planted captions use unrelated filler vocabulary.
    None,
    /// Several non-planted moments carry captions sharing the question's
    /// common vocabulary, but never the keyword. Raw question similarity
    /// prefers them; memory-grounded clues do not.
    Paraphrase,
}

impl std::str::FromStr for DistractorProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DistractorProfile::None),
            "paraphrase" => Ok(DistractorProfile::Paraphrase),
            other => Err(Error::validation(format!(
                "unknown distractor profile {other:?} (expected none|paraphrase)"
            ))),
        }
    }
}

/// One synthetic benchmark case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCase {
    pub case_id: String,
    pub manifest: FrameManifest,
    pub subtitles: Vec<SubtitleEntry>,
    pub question: String,
    pub planted_moment_ids: BTreeSet<u64>,
    pub planted_keyword: String,
    pub answer: String,
    pub distractor_profile: DistractorProfile,
    /// Moment duration the planting was computed for; evaluation must
    /// segment with the same value for the ground truth to line up.
    pub moment_duration_s: f64,
}

const MOMENT_DURATION_S: f64 = 10.0;
const FRAME_STEP_S: f64 = 2.0;
const DISTRACTOR_MOMENTS: usize = 8;

/// Common filler vocabulary; shared across most captions so its words carry
/// little information.
const COMMON_WORDS: &[&str] = &[
    "street", "market", "corner", "people", "walk", "morning", "light", "shop", "river",
    "bridge", "crowd", "music", "stand", "vendor", "wall", "bench", "tree", "cart",
];

/// Rare object vocabulary; evidence words are drawn from here and appear
/// only in planted captions and the question.
const RARE_WORDS: &[&str] = &[
    "astrolabe", "furnace", "mosaic", "pendulum", "telescope", "accordion", "anvil",
    "chandelier", "gargoyle", "harpoon", "kaleidoscope", "lighthouse", "marionette", "obelisk",
    "propeller", "quill", "sundial", "tapestry", "unicycle", "windmill",
];

const KEYWORD_STEMS: &[&str] = &["zeph", "quor", "marl", "fenn", "voss", "trill"];

/// Generate `n_cases` deterministic synthetic cases.
pub fn generate_synthetic(
    seed: u64,
    n_cases: usize,
    profile: DistractorProfile,
) -> Result<Vec<SyntheticCase>> {
    if n_cases == 0 {
        return Err(Error::validation("n_cases must be at least 1"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..n_cases)
        .map(|i| {
            let case_seed = master.gen::<u64>();
            build_case(i, case_seed, profile)
        })
        .collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// Pick `n` distinct words from a pool.
fn pick_distinct<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], n: usize) -> Vec<&'a str> {
    let mut chosen: Vec<&str> = Vec::with_capacity(n);
    while chosen.len() < n {
        let w = pick(rng, pool);
        if !chosen.contains(&w) {
            chosen.push(w);
        }
    }
    chosen
}

fn build_case(index: usize, case_seed: u64, profile: DistractorProfile) -> Result<SyntheticCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);

    // 30–60 minute timeline on a 2 s frame grid.
    let duration_s = rng.gen_range(900..=1800) as f64 * FRAME_STEP_S;
    let n_moments = (duration_s / MOMENT_DURATION_S).ceil() as u64;

    let keyword = format!("{}{:04x}", pick(&mut rng, KEYWORD_STEMS), rng.gen::<u16>());
    let rare = pick_distinct(&mut rng, RARE_WORDS, 3);
    let (evidence_a, evidence_b, rare_tail) = (rare[0], rare[1], rare[2]);
    let question_common = pick_distinct(&mut rng, COMMON_WORDS, 4);

    let n_planted = rng.gen_range(1..=4usize);
    let mut planted: BTreeSet<u64> = BTreeSet::new();
    while planted.len() < n_planted {
        planted.insert(rng.gen_range(0..n_moments));
    }

    let mut distractors: BTreeSet<u64> = BTreeSet::new();
    if profile == DistractorProfile::Paraphrase {
        let want = DISTRACTOR_MOMENTS.min(n_moments as usize - n_planted);
        while distractors.len() < want {
            let id = rng.gen_range(0..n_moments);
            if !planted.contains(&id) {
                distractors.insert(id);
            }
        }
    }

    let planted_caption = format!(
        "the {keyword} {evidence_a} {evidence_b} near the {rare_tail}"
    );
    let question = format!(
        "what happened to the {keyword} {evidence_a} {evidence_b} near the {} {} by the {} {}?",
        question_common[0], question_common[1], question_common[2], question_common[3]
    );
    let distractor_caption = format!(
        "the {} {} near the {} {}",
        question_common[0], question_common[1], question_common[2], question_common[3]
    );
    let answer = format!("the {evidence_a} {evidence_b} beside the {rare_tail}");

    // One caption on each moment's first frame; filler text is drawn from
    // the common pool so it dominates document frequencies.
    let mut frames = Vec::new();
    let n_frames = (duration_s / FRAME_STEP_S) as u64 + 1;
    for f in 0..n_frames {
        let timestamp_s = f as f64 * FRAME_STEP_S;
        let moment_id = ((timestamp_s / MOMENT_DURATION_S).floor() as u64).min(n_moments - 1);
        let is_first_frame_of_moment =
            (timestamp_s - moment_id as f64 * MOMENT_DURATION_S) < FRAME_STEP_S;
        let caption = if is_first_frame_of_moment {
            if planted.contains(&moment_id) {
                Some(planted_caption.clone())
            } else if distractors.contains(&moment_id) {
                Some(distractor_caption.clone())
            } else {
                let filler = pick_distinct(&mut rng, COMMON_WORDS, 3);
                Some(format!(
                    "the {} {} near the {}",
                    filler[0], filler[1], filler[2]
                ))
            }
        } else {
            None
        };
        frames.push(FrameRef {
            frame_idx: f,
            timestamp_s,
            caption,
            embedding: None,
        });
    }
    let manifest = FrameManifest::new(format!("synthetic-{index:04}"), frames, Some(duration_s))?;

    // Neutral narration; every seventh case has no subtitles at all so the
    // optional channel gets exercised.
    let subtitles = if index % 7 == 6 {
        Vec::new()
    } else {
        let n_cues = rng.gen_range(6..=14);
        (0..n_cues)
            .map(|c| {
                let start = c as f64 * duration_s / n_cues as f64;
                let words = pick_distinct(&mut rng, COMMON_WORDS, 2);
                SubtitleEntry::new(
                    start,
                    start + 4.0,
                    format!("the {} {} continues", words[0], words[1]),
                )
            })
            .collect::<Result<Vec<_>>>()?
    };

    Ok(SyntheticCase {
        case_id: format!("case-{index:04}"),
        manifest,
        subtitles,
        question,
        planted_moment_ids: planted,
        planted_keyword: keyword,
        answer,
        distractor_profile: profile,
        moment_duration_s: MOMENT_DURATION_S,
    })
}

/// Write cases as line-delimited JSON.
pub fn write_cases(cases: &[SyntheticCase], writer: &mut impl std::io::Write) -> Result<()> {
    for case in cases {
        writeln!(writer, "{}", serde_json::to_string(case)?)?;
    }
    Ok(())
}

/// Read cases written by [`write_cases`].
pub fn read_cases(path: &std::path::Path) -> Result<Vec<SyntheticCase>> {
    let content = std::fs::read_to_string(path)?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_synthetic(7, 10, DistractorProfile::None).unwrap();
        let b = generate_synthetic(7, 10, DistractorProfile::None).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(8, 10, DistractorProfile::None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn timelines_are_long_video_scale() {
        let cases = generate_synthetic(1, 20, DistractorProfile::None).unwrap();
        for case in &cases {
            assert!(case.manifest.duration_s >= 1800.0);
            assert!(case.manifest.duration_s <= 3600.0);
            assert!(!case.planted_moment_ids.is_empty());
            assert!(case.planted_moment_ids.len() <= 4);
        }
    }

    #[test]
    fn keyword_appears_only_in_planted_captions() {
        let cases = generate_synthetic(3, 10, DistractorProfile::None).unwrap();
        for case in &cases {
            for frame in &case.manifest.frames {
                if let Some(caption) = &frame.caption {
                    let moment_id = (frame.timestamp_s / case.moment_duration_s).floor() as u64;
                    if caption.contains(&case.planted_keyword) {
                        assert!(
                            case.planted_moment_ids.contains(&moment_id),
                            "keyword leaked into moment {moment_id}"
                        );
                    }
                }
            }
            for cue in &case.subtitles {
                assert!(!cue.text.contains(&case.planted_keyword));
            }
            assert!(case.question.contains(&case.planted_keyword));
        }
    }

    #[test]
    fn paraphrase_distractors_share_vocabulary_but_not_keyword() {
        let cases = generate_synthetic(5, 10, DistractorProfile::Paraphrase).unwrap();
        for case in &cases {
            // Corpus scan oracle: captions sharing >= 3 question words that
            // are not planted must exist, and none may contain the keyword.
            let question_words: std::collections::HashSet<&str> =
                case.question
                    .trim_end_matches('?')
                    .split_whitespace()
                    .collect();
            let mut found_distractor = false;
            for frame in &case.manifest.frames {
                let Some(caption) = &frame.caption else {
                    continue;
                };
                let moment_id = (frame.timestamp_s / case.moment_duration_s).floor() as u64;
                if case.planted_moment_ids.contains(&moment_id) {
                    continue;
                }
                assert!(!caption.contains(&case.planted_keyword));
                let shared = caption
                    .split_whitespace()
                    .filter(|w| question_words.contains(w) && *w != "the")
                    .count();
                if shared >= 3 {
                    found_distractor = true;
                }
            }
            assert!(found_distractor, "no paraphrase distractor in {}", case.case_id);
        }
    }

    #[test]
    fn cases_round_trip_through_jsonl() {
        let cases = generate_synthetic(11, 3, DistractorProfile::Paraphrase).unwrap();
        let mut buf = Vec::new();
        write_cases(&cases, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        std::fs::write(&path, &buf).unwrap();
        let loaded = read_cases(&path).unwrap();
        assert_eq!(loaded, cases);
    }
}
