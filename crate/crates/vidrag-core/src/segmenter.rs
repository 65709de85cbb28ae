//! Timeline segmentation: frame manifests, subtitles, and fixed-duration
//! moments.
//!
//! A video enters the pipeline as a frame manifest (one record per decoded
//! frame) plus optional subtitles. The segmenter partitions the timeline
//! into non-overlapping, fixed-duration moments — the unit of retrieval —
//! and samples frames inside a moment at a target rate.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One decoded frame of a video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub frame_idx: u64,
    pub timestamp_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    /// Precomputed embedding, when the manifest producer supplies one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

/// An ordered, validated collection of frames for a single video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub video_id: String,
    pub frames: Vec<FrameRef>,
    pub duration_s: f64,
}

impl FrameManifest {
    /// Validate and construct a manifest. When `duration_s` is `None` it is
    /// inferred from the last frame's timestamp.
    pub fn new(video_id: String, frames: Vec<FrameRef>, duration_s: Option<f64>) -> Result<Self> {
        if video_id.is_empty() {
            return Err(Error::validation("video_id must be non-empty"));
        }
        if frames.is_empty() {
            return Err(Error::validation("empty manifest"));
        }
        let mut seen = HashSet::new();
        for pair in frames.windows(2) {
            if pair[1].timestamp_s <= pair[0].timestamp_s {
                return Err(Error::validation(format!(
                    "frame timestamps must be strictly ascending: {} then {}",
                    pair[0].timestamp_s, pair[1].timestamp_s
                )));
            }
        }
        for f in &frames {
            if !f.timestamp_s.is_finite() || f.timestamp_s < 0.0 {
                return Err(Error::validation(format!(
                    "frame {} has invalid timestamp {}",
                    f.frame_idx, f.timestamp_s
                )));
            }
            if !seen.insert(f.frame_idx) {
                return Err(Error::validation(format!(
                    "duplicate frame_idx {}",
                    f.frame_idx
                )));
            }
        }
        let max_ts = frames.last().map(|f| f.timestamp_s).unwrap_or(0.0);
        let duration_s = match duration_s {
            Some(d) => {
                if !d.is_finite() || d < max_ts {
                    return Err(Error::validation(format!(
                        "duration_s {d} is less than the last frame timestamp {max_ts}"
                    )));
                }
                d
            }
            None => max_ts,
        };
        Ok(Self {
            video_id,
            frames,
            duration_s,
        })
    }

    /// Look up a frame by index.
    pub fn frame(&self, frame_idx: u64) -> Option<&FrameRef> {
        // Frames are sorted by timestamp, not index; linear scan is fine at
        // manifest scale but a binary search over idx order is not valid.
        self.frames.iter().find(|f| f.frame_idx == frame_idx)
    }
}

/// A contiguous fixed-duration slice of a video's timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub moment_id: u64,
    pub video_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub frame_idxs: Vec<u64>,
}

/// One subtitle cue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleEntry {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl SubtitleEntry {
    pub fn new(start_s: f64, end_s: f64, text: String) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite()) || start_s > end_s {
            return Err(Error::validation(format!(
                "subtitle interval [{start_s}, {end_s}] is invalid"
            )));
        }
        if text.trim().is_empty() {
            return Err(Error::validation("subtitle text must be non-empty"));
        }
        Ok(Self {
            start_s,
            end_s,
            text,
        })
    }
}

/// Subtitle text grouped into one moment-sized window, the unit indexed by
/// the subtitle retrieval channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleSpan {
    /// Id of the moment window this span covers.
    pub span_id: u64,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

/// Raw manifest record as it appears on disk, one JSON object per line.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRecord {
    video_id: String,
    frame_idx: u64,
    timestamp_s: f64,
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    embedding: Option<Vec<f64>>,
    /// Optional explicit duration; the maximum over all records wins.
    #[serde(default)]
    duration_s: Option<f64>,
}

/// Load a line-delimited frame manifest.
///
/// Records must share one `video_id` and arrive in strictly ascending
/// timestamp order. Duration is taken from the largest explicit
/// `duration_s` field, or inferred from the last timestamp.
pub fn load_manifest(path: &Path) -> Result<FrameManifest> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut video_id: Option<String> = None;
    let mut frames = Vec::new();
    let mut explicit_duration: Option<f64> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        match &video_id {
            None => video_id = Some(record.video_id.clone()),
            Some(v) if *v != record.video_id => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!(
                        "manifest mixes video ids {:?} and {:?}",
                        v, record.video_id
                    ),
                });
            }
            Some(_) => {}
        }
        if let Some(d) = record.duration_s {
            explicit_duration = Some(explicit_duration.map_or(d, |prev: f64| prev.max(d)));
        }
        frames.push(FrameRef {
            frame_idx: record.frame_idx,
            timestamp_s: record.timestamp_s,
            caption: record.caption,
            embedding: record.embedding,
        });
    }
    let video_id = video_id.ok_or_else(|| Error::validation("empty manifest"))?;
    FrameManifest::new(video_id, frames, explicit_duration)
}

/// Partition a manifest's timeline into fixed-duration moments.
///
/// Produces `ceil(duration / moment_duration_s)` moments tiling
/// `[0, duration_s]`. A frame on a boundary belongs to the later moment;
/// the final moment is closed on the right so a frame at exactly
/// `duration_s` still has a home.
pub fn segment_moments(manifest: &FrameManifest, moment_duration_s: f64) -> Result<Vec<Moment>> {
    if !(moment_duration_s.is_finite() && moment_duration_s > 0.0) {
        return Err(Error::validation(format!(
            "moment duration must be positive, got {moment_duration_s}"
        )));
    }
    if manifest.duration_s <= 0.0 {
        return Err(Error::validation("zero-length video"));
    }
    let count = (manifest.duration_s / moment_duration_s).ceil() as u64;
    let count = count.max(1);
    let mut moments: Vec<Moment> = (0..count)
        .map(|j| {
            let start_s = j as f64 * moment_duration_s;
            let end_s = ((j + 1) as f64 * moment_duration_s).min(manifest.duration_s);
            Moment {
                moment_id: j,
                video_id: manifest.video_id.clone(),
                start_s,
                end_s,
                frame_idxs: Vec::new(),
            }
        })
        .collect();
    for frame in &manifest.frames {
        let j = ((frame.timestamp_s / moment_duration_s).floor() as u64).min(count - 1);
        moments[j as usize].frame_idxs.push(frame.frame_idx);
    }
    Ok(moments)
}

/// Sample frames inside one moment at roughly `fps` frames per second.
///
/// Builds a target grid `start, start + 1/fps, ...` over the moment and
/// picks the nearest available frame for each target, ties going to the
/// earlier frame. Duplicates are dropped, so the result never exceeds the
/// moment's frame count.
pub fn sample_frames_in_moment(
    moment: &Moment,
    manifest: &FrameManifest,
    fps: f64,
) -> Result<Vec<FrameRef>> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::validation(format!("fps must be positive, got {fps}")));
    }
    let candidates: Vec<&FrameRef> = manifest
        .frames
        .iter()
        .filter(|f| moment.frame_idxs.contains(&f.frame_idx))
        .collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let step = 1.0 / fps;
    let mut selected: Vec<FrameRef> = Vec::new();
    let mut chosen = HashSet::new();
    let mut target = moment.start_s;
    while target < moment.end_s {
        let nearest = candidates
            .iter()
            .min_by(|a, b| {
                let da = (a.timestamp_s - target).abs();
                let db = (b.timestamp_s - target).abs();
                da.total_cmp(&db)
                    .then_with(|| a.timestamp_s.total_cmp(&b.timestamp_s))
            })
            .expect("candidates non-empty");
        if chosen.insert(nearest.frame_idx) {
            selected.push((*nearest).clone());
        }
        target += step;
    }
    selected.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    Ok(selected)
}

/// Load subtitles from either an SRT file or line-delimited JSON records.
///
/// Files ending in `.srt` use the SRT cue format; anything else is parsed
/// as one `{start_s, end_s, text}` object per line. Output is sorted by
/// start time.
pub fn load_subtitles(path: &Path) -> Result<Vec<SubtitleEntry>> {
    let is_srt = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("srt"))
        .unwrap_or(false);
    let content = std::fs::read_to_string(path)?;
    let mut entries = if is_srt {
        parse_srt(&content)?
    } else {
        parse_subtitle_jsonl(&content)?
    };
    entries.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    Ok(entries)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubtitleRecord {
    start_s: f64,
    end_s: f64,
    text: String,
}

fn parse_subtitle_jsonl(content: &str) -> Result<Vec<SubtitleEntry>> {
    let mut entries = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: SubtitleRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        entries.push(SubtitleEntry::new(
            record.start_s,
            record.end_s,
            record.text,
        )?);
    }
    Ok(entries)
}

fn parse_srt(content: &str) -> Result<Vec<SubtitleEntry>> {
    let mut entries = Vec::new();
    let mut lines = content.lines().enumerate().peekable();
    while let Some((lineno, line)) = lines.next() {
        let trimmed = line.trim_start_matches('\u{feff}').trim();
        if trimmed.is_empty() {
            continue;
        }
        // Cue index line; tolerate cues that omit it.
        let (timing_lineno, timing) = if trimmed.chars().all(|c| c.is_ascii_digit()) {
            match lines.next() {
                Some(next) => next,
                None => break,
            }
        } else {
            (lineno, line)
        };
        let (start_s, end_s) = parse_srt_timing(timing).map_err(|message| Error::Parse {
            line: timing_lineno + 1,
            message,
        })?;
        let mut text_parts = Vec::new();
        while let Some((_, l)) = lines.peek() {
            if l.trim().is_empty() {
                break;
            }
            text_parts.push(lines.next().unwrap().1.trim().to_string());
        }
        let text = text_parts.join(" ");
        // Cues without text are formatting noise; skip rather than reject.
        if text.is_empty() {
            continue;
        }
        entries.push(SubtitleEntry::new(start_s, end_s, text)?);
    }
    Ok(entries)
}

fn parse_srt_timing(line: &str) -> std::result::Result<(f64, f64), String> {
    let mut parts = line.split("-->");
    let start = parts.next().ok_or("missing start timestamp")?.trim();
    let end = parts.next().ok_or("missing '-->' separator")?.trim();
    // Trailing position metadata after the end timestamp is allowed.
    let end = end.split_whitespace().next().ok_or("missing end timestamp")?;
    Ok((parse_srt_timestamp(start)?, parse_srt_timestamp(end)?))
}

fn parse_srt_timestamp(ts: &str) -> std::result::Result<f64, String> {
    let normalized = ts.replace(',', ".");
    let fields: Vec<&str> = normalized.split(':').collect();
    if fields.len() != 3 {
        return Err(format!("malformed timestamp {ts:?}"));
    }
    let hours: f64 = fields[0]
        .parse()
        .map_err(|_| format!("malformed timestamp {ts:?}"))?;
    let minutes: f64 = fields[1]
        .parse()
        .map_err(|_| format!("malformed timestamp {ts:?}"))?;
    let seconds: f64 = fields[2]
        .parse()
        .map_err(|_| format!("malformed timestamp {ts:?}"))?;
    if hours < 0.0 || !(0.0..60.0).contains(&minutes) || !(0.0..60.0).contains(&seconds) {
        return Err(format!("timestamp fields out of range in {ts:?}"));
    }
    Ok(hours * 3600.0 + minutes * 60.0 + seconds)
}

/// Representative text for a moment: its frames' captions joined by spaces.
pub fn moment_caption_text(moment: &Moment, manifest: &FrameManifest) -> String {
    let mut parts = Vec::new();
    for frame in &manifest.frames {
        if moment.frame_idxs.contains(&frame.frame_idx) {
            if let Some(caption) = &frame.caption {
                if !caption.trim().is_empty() {
                    parts.push(caption.trim().to_string());
                }
            }
        }
    }
    parts.join(" ")
}

/// Group subtitle cues into per-moment windows.
///
/// Cues are assigned to the window containing their start time; cues past
/// the final window land in the last moment. Windows without any text are
/// omitted.
pub fn group_subtitles_into_spans(
    subtitles: &[SubtitleEntry],
    moments: &[Moment],
) -> Vec<SubtitleSpan> {
    if moments.is_empty() {
        return Vec::new();
    }
    let mut texts: Vec<Vec<String>> = vec![Vec::new(); moments.len()];
    for cue in subtitles {
        let slot = moments
            .iter()
            .position(|m| cue.start_s >= m.start_s && cue.start_s < m.end_s)
            .unwrap_or(moments.len() - 1);
        texts[slot].push(cue.text.clone());
    }
    moments
        .iter()
        .zip(texts)
        .filter(|(_, t)| !t.is_empty())
        .map(|(m, t)| SubtitleSpan {
            span_id: m.moment_id,
            start_s: m.start_s,
            end_s: m.end_s,
            text: t.join(" "),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn frame(idx: u64, ts: f64) -> FrameRef {
        FrameRef {
            frame_idx: idx,
            timestamp_s: ts,
            caption: None,
            embedding: None,
        }
    }

    fn manifest_with_step(n: usize, step: f64) -> FrameManifest {
        let frames = (0..n).map(|i| frame(i as u64, i as f64 * step)).collect();
        FrameManifest::new("vid".into(), frames, None).unwrap()
    }

    #[test]
    fn load_manifest_reads_records_and_infers_duration() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":0,"timestamp_s":0.0}}"#).unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":1,"timestamp_s":1.0}}"#).unwrap();
        writeln!(
            f,
            r#"{{"video_id":"v1","frame_idx":2,"timestamp_s":2.0,"caption":"a dog"}}"#
        )
        .unwrap();
        let m = load_manifest(f.path()).unwrap();
        assert_eq!(m.frames.len(), 3);
        assert_eq!(m.duration_s, 2.0);
        assert_eq!(m.frames[2].caption.as_deref(), Some("a dog"));
    }

    #[test]
    fn load_manifest_rejects_empty_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let err = load_manifest(f.path()).unwrap_err();
        assert!(err.to_string().contains("empty manifest"), "{err}");
    }

    #[test]
    fn load_manifest_rejects_duplicate_frame_idx() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":0,"timestamp_s":0.0}}"#).unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":0,"timestamp_s":1.0}}"#).unwrap();
        let err = load_manifest(f.path()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn load_manifest_rejects_non_monotone_timestamps() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":0,"timestamp_s":2.0}}"#).unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":1,"timestamp_s":1.0}}"#).unwrap();
        let err = load_manifest(f.path()).unwrap_err();
        assert!(err.to_string().contains("ascending"), "{err}");
    }

    #[test]
    fn load_manifest_reports_line_number_for_bad_record() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"video_id":"v1","frame_idx":0,"timestamp_s":0.0}}"#).unwrap();
        writeln!(f, "not json").unwrap();
        match load_manifest(f.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn segment_hour_long_video_into_ten_second_moments() {
        let manifest = FrameManifest::new(
            "vid".into(),
            vec![frame(0, 0.0), frame(1, 3600.0)],
            Some(3600.0),
        )
        .unwrap();
        let moments = segment_moments(&manifest, 10.0).unwrap();
        assert_eq!(moments.len(), 360);
        assert!(moments.iter().all(|m| (m.end_s - m.start_s) == 10.0));
    }

    #[test]
    fn segment_keeps_short_tail_moment() {
        let manifest =
            FrameManifest::new("vid".into(), vec![frame(0, 0.0), frame(1, 605.0)], None).unwrap();
        let moments = segment_moments(&manifest, 10.0).unwrap();
        assert_eq!(moments.len(), 61);
        let last = moments.last().unwrap();
        assert_eq!(last.start_s, 600.0);
        assert_eq!(last.end_s, 605.0);
        // The frame sitting exactly on the global end belongs to the tail.
        assert_eq!(last.frame_idxs, vec![1]);
    }

    #[test]
    fn segment_rejects_zero_length_video() {
        let manifest = FrameManifest::new("vid".into(), vec![frame(0, 0.0)], None).unwrap();
        let err = segment_moments(&manifest, 10.0).unwrap_err();
        assert!(err.to_string().contains("zero-length video"), "{err}");
    }

    #[test]
    fn segments_tile_timeline_and_conserve_frames() {
        let manifest = manifest_with_step(101, 0.73);
        let moments = segment_moments(&manifest, 7.0).unwrap();
        assert_eq!(moments[0].start_s, 0.0);
        assert_eq!(moments.last().unwrap().end_s, manifest.duration_s);
        for pair in moments.windows(2) {
            assert_eq!(pair[0].end_s, pair[1].start_s);
        }
        let total: usize = moments.iter().map(|m| m.frame_idxs.len()).sum();
        assert_eq!(total, manifest.frames.len());
    }

    #[test]
    fn boundary_frame_goes_to_later_moment() {
        let frames = vec![frame(0, 0.0), frame(1, 10.0), frame(2, 19.0)];
        let manifest = FrameManifest::new("vid".into(), frames, Some(20.0)).unwrap();
        let moments = segment_moments(&manifest, 10.0).unwrap();
        assert_eq!(moments[0].frame_idxs, vec![0]);
        assert_eq!(moments[1].frame_idxs, vec![1, 2]);
    }

    #[test]
    fn sample_frames_picks_one_per_second() {
        // Frames every 0.5 s over a 10 s moment; the 1 fps grid lands on the
        // even frames. Expected set computed by scanning the grid by hand:
        // targets 0..10 s hit frames 0,2,4,...,18.
        let manifest = manifest_with_step(21, 0.5);
        let moments = segment_moments(&manifest, 10.0).unwrap();
        let sampled = sample_frames_in_moment(&moments[0], &manifest, 1.0).unwrap();
        let idxs: Vec<u64> = sampled.iter().map(|f| f.frame_idx).collect();
        assert_eq!(idxs, vec![0, 2, 4, 6, 8, 10, 12, 14, 16, 18]);
    }

    #[test]
    fn sample_frames_single_frame_moment() {
        let manifest = FrameManifest::new(
            "vid".into(),
            vec![frame(0, 2.0), frame(1, 30.0)],
            Some(30.0),
        )
        .unwrap();
        let moments = segment_moments(&manifest, 10.0).unwrap();
        let sampled = sample_frames_in_moment(&moments[0], &manifest, 4.0).unwrap();
        assert_eq!(sampled.len(), 1);
        assert_eq!(sampled[0].frame_idx, 0);
    }

    #[test]
    fn sample_frames_high_fps_selects_all_once() {
        let manifest = manifest_with_step(11, 1.0);
        let moments = segment_moments(&manifest, 5.0).unwrap();
        let sampled = sample_frames_in_moment(&moments[0], &manifest, 100.0).unwrap();
        let idxs: Vec<u64> = sampled.iter().map(|f| f.frame_idx).collect();
        assert_eq!(idxs, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn sample_frames_empty_moment_is_empty() {
        let manifest = FrameManifest::new(
            "vid".into(),
            vec![frame(0, 0.0), frame(1, 25.0)],
            Some(30.0),
        )
        .unwrap();
        let moments = segment_moments(&manifest, 10.0).unwrap();
        let sampled = sample_frames_in_moment(&moments[1], &manifest, 1.0).unwrap();
        assert!(sampled.is_empty());
    }

    #[test]
    fn load_subtitles_jsonl_sorts_by_start() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"start_s":5.0,"end_s":6.0,"text":"later"}}"#).unwrap();
        writeln!(f, r#"{{"start_s":1.0,"end_s":2.0,"text":"earlier"}}"#).unwrap();
        let subs = load_subtitles(f.path()).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].text, "earlier");
        assert_eq!(subs[1].text, "later");
    }

    #[test]
    fn load_subtitles_empty_file_is_empty() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let subs = load_subtitles(f.path()).unwrap();
        assert!(subs.is_empty());
    }

    #[test]
    fn parse_srt_cues() {
        let srt = "1\n00:00:01,000 --> 00:00:04,500\nhello there\nsecond line\n\n2\n00:01:00,250 --> 00:01:02,000\nanother cue\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("subs.srt");
        std::fs::write(&path, srt).unwrap();
        let subs = load_subtitles(&path).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].start_s, 1.0);
        assert_eq!(subs[0].end_s, 4.5);
        assert_eq!(subs[0].text, "hello there second line");
        assert_eq!(subs[1].start_s, 60.25);
    }

    #[test]
    fn parse_srt_rejects_malformed_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("subs.srt");
        std::fs::write(&path, "1\n00:xx:01,000 --> 00:00:04,000\ntext\n").unwrap();
        let err = load_subtitles(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn group_subtitles_assigns_by_start_time() {
        let manifest = manifest_with_step(31, 1.0);
        let moments = segment_moments(&manifest, 10.0).unwrap();
        let subs = vec![
            SubtitleEntry::new(0.5, 2.0, "first window".into()).unwrap(),
            SubtitleEntry::new(3.0, 4.0, "still first".into()).unwrap(),
            SubtitleEntry::new(25.0, 28.0, "third window".into()).unwrap(),
        ];
        let spans = group_subtitles_into_spans(&subs, &moments);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].span_id, 0);
        assert_eq!(spans[0].text, "first window still first");
        assert_eq!(spans[1].span_id, 2);
    }

    #[test]
    fn moment_caption_text_joins_captions() {
        let frames = vec![
            FrameRef {
                frame_idx: 0,
                timestamp_s: 0.0,
                caption: Some("a red kite".into()),
                embedding: None,
            },
            FrameRef {
                frame_idx: 1,
                timestamp_s: 1.0,
                caption: None,
                embedding: None,
            },
            FrameRef {
                frame_idx: 2,
                timestamp_s: 2.0,
                caption: Some("above the beach".into()),
                embedding: None,
            },
        ];
        let manifest = FrameManifest::new("vid".into(), frames, Some(5.0)).unwrap();
        let moments = segment_moments(&manifest, 5.0).unwrap();
        assert_eq!(
            moment_caption_text(&moments[0], &manifest),
            "a red kite above the beach"
        );
    }
}
