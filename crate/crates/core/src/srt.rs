//! SubRip rendering and parsing.
//!
//! Rendered timestamps are relative to the trim start, because exported
//! videos are trimmed; stored segments are relative to the raw video.

use crate::annotation::{structural_errors, AnnotationTrack, Segment};
use crate::domain::TrimWindow;
use crate::error::{Error, Result};

/// Formats milliseconds as `HH:MM:SS,mmm`.
pub fn format_timestamp(ms: i64) -> String {
    let ms = ms.max(0);
    format!(
        "{:02}:{:02}:{:02},{:03}",
        ms / 3_600_000,
        ms / 60_000 % 60,
        ms / 1000 % 60,
        ms % 1000
    )
}

/// Parses `HH:MM:SS,mmm` (a `.` before the milliseconds is also accepted).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let (hms, millis) = s.trim().split_once([',', '.'])?;
    let mut parts = hms.split(':');
    let (h, m, sec) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || millis.len() != 3 || m.len() != 2 || sec.len() != 2 || h.is_empty() {
        return None;
    }
    let num = |p: &str| -> Option<i64> {
        p.bytes().all(|b| b.is_ascii_digit()).then(|| p.parse().ok()).flatten()
    };
    let (h, m, sec, millis) = (num(h)?, num(m)?, num(sec)?, num(millis)?);
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + millis)
}

/// Renders a valid track as SubRip text with LF line endings.
pub fn render_srt(track: &AnnotationTrack, trim: TrimWindow) -> Result<String> {
    if track.segments.is_empty() {
        return Err(Error::InvalidTrack("track has no segments".into()));
    }
    if let Some(err) = structural_errors(&track.segments, trim).first() {
        return Err(Error::InvalidTrack(err.to_string()));
    }
    let mut out = String::new();
    for (i, seg) in track.segments.iter().enumerate() {
        let text = seg.text.replace("\r\n", "\n");
        if text.split('\n').any(|line| line.trim().is_empty()) {
            return Err(Error::InvalidTrack(format!(
                "segment {i} text contains an empty line"
            )));
        }
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            i + 1,
            format_timestamp(seg.start_ms - trim.start_ms),
            format_timestamp(seg.end_ms - trim.start_ms),
            text
        ));
    }
    Ok(out)
}

/// Parses SubRip text into segments with times as written in the file.
pub fn parse_srt(text: &str) -> Result<Vec<Segment>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<&str> = text.lines().collect();
    let syntax = |line: usize, detail: &str| Error::SrtSyntax {
        line,
        detail: detail.to_string(),
    };

    let mut segments = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let index = lines[i].trim();
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return Err(syntax(i + 1, "expected a cue number"));
        }
        i += 1;
        let timing = lines.get(i).ok_or_else(|| syntax(i + 1, "missing timing line"))?;
        let (start, rest) = timing
            .split_once("-->")
            .ok_or_else(|| syntax(i + 1, "timing line lacks `-->`"))?;
        let end = rest.split_whitespace().next().unwrap_or_default();
        let start_ms = parse_timestamp(start).ok_or_else(|| syntax(i + 1, "bad start timestamp"))?;
        let end_ms = parse_timestamp(end).ok_or_else(|| syntax(i + 1, "bad end timestamp"))?;
        i += 1;
        let mut body = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            body.push(lines[i]);
            i += 1;
        }
        if body.is_empty() {
            return Err(syntax(i, "cue has no text"));
        }
        segments.push(Segment::new(start_ms, end_ms, body.join("\n")));
    }
    Ok(segments)
}

/// Parses a rendered file back into raw-video times for `trim`.
pub fn parse_srt_for_trim(text: &str, trim: TrimWindow) -> Result<Vec<Segment>> {
    Ok(parse_srt(text)?
        .into_iter()
        .map(|s| Segment::new(s.start_ms + trim.start_ms, s.end_ms + trim.start_ms, s.text))
        .collect())
}
