//! Timestamped sentence and gloss tracks over a recording.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{LanguageCode, RecordingId, TrimWindow, UserId};
use crate::text::{normalize_text, split_sentences, tokenize_words};

/// A labelled span in milliseconds of the untrimmed video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start_ms: i64,
    pub end_ms: i64,
    pub text: String,
}

impl Segment {
    pub fn new(start_ms: i64, end_ms: i64, text: impl Into<String>) -> Self {
        Segment {
            start_ms,
            end_ms,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackKind {
    Sentence,
    Gloss,
}

impl TrackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackKind::Sentence => "sentence",
            TrackKind::Gloss => "gloss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sentence" => Some(TrackKind::Sentence),
            "gloss" => Some(TrackKind::Gloss),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTrack {
    pub kind: TrackKind,
    pub segments: Vec<Segment>,
    pub recording_id: RecordingId,
    pub annotator_id: UserId,
}

/// One reason a track was rejected; `index` is the offending segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrackError {
    #[serde(rename = "E_BAD_SEGMENT")]
    BadSegment { index: usize },
    #[serde(rename = "E_UNSORTED")]
    Unsorted { index: usize },
    #[serde(rename = "E_OVERLAP")]
    Overlap { index: usize },
    #[serde(rename = "E_OUT_OF_TRIM")]
    OutOfTrim { index: usize },
    #[serde(rename = "E_MULTIWORD_GLOSS")]
    MultiwordGloss { index: usize },
    #[serde(rename = "E_TEXT_MISMATCH")]
    TextMismatch { index: usize },
}

impl TrackError {
    pub fn code(&self) -> &'static str {
        match self {
            TrackError::BadSegment { .. } => "E_BAD_SEGMENT",
            TrackError::Unsorted { .. } => "E_UNSORTED",
            TrackError::Overlap { .. } => "E_OVERLAP",
            TrackError::OutOfTrim { .. } => "E_OUT_OF_TRIM",
            TrackError::MultiwordGloss { .. } => "E_MULTIWORD_GLOSS",
            TrackError::TextMismatch { .. } => "E_TEXT_MISMATCH",
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            TrackError::BadSegment { index }
            | TrackError::Unsorted { index }
            | TrackError::Overlap { index }
            | TrackError::OutOfTrim { index }
            | TrackError::MultiwordGloss { index }
            | TrackError::TextMismatch { index } => index,
        }
    }
}

impl fmt::Display for TrackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at segment {}", self.code(), self.index())
    }
}

/// Deployment switches that change what counts as a valid track.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackRules {
    /// Gloss labels need not equal the transcript tokens; only the count must.
    pub free_gloss_labels: bool,
}

/// Ordering, overlap, and trim checks that do not depend on the text.
pub fn structural_errors(segments: &[Segment], trim: TrimWindow) -> Vec<TrackError> {
    let mut errors = Vec::new();
    for (index, seg) in segments.iter().enumerate() {
        if seg.start_ms >= seg.end_ms || seg.text.trim().is_empty() {
            errors.push(TrackError::BadSegment { index });
        }
        if seg.start_ms < trim.start_ms || seg.end_ms > trim.end_ms {
            errors.push(TrackError::OutOfTrim { index });
        }
        if index > 0 {
            let prev = &segments[index - 1];
            if seg.start_ms < prev.start_ms {
                errors.push(TrackError::Unsorted { index });
            } else if seg.start_ms < prev.end_ms {
                errors.push(TrackError::Overlap { index });
            }
        }
    }
    errors
}

/// Position of the first difference between two sequences, if any.
fn first_divergence<T: PartialEq>(a: &[T], b: &[T]) -> Option<usize> {
    match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(i) => Some(i),
        None if a.len() != b.len() => Some(a.len().min(b.len())),
        None => None,
    }
}

/// Checks a track against its trim window and the text it transcribes.
///
/// Sentence tracks must reproduce the sentences of `reference_text` in order
/// (NFC and whitespace-insensitive). Gloss tracks hold one token per segment
/// and must reproduce the reference's token sequence exactly.
pub fn validate_track(
    track: &AnnotationTrack,
    trim: TrimWindow,
    reference_text: &str,
    language: &LanguageCode,
    rules: TrackRules,
) -> Result<(), Vec<TrackError>> {
    let segments = &track.segments;
    let mut errors = structural_errors(segments, trim);

    match track.kind {
        TrackKind::Sentence => {
            let expected: Vec<String> = split_sentences(reference_text, language)
                .iter()
                .map(|s| normalize_text(s))
                .collect();
            let got: Vec<String> = segments.iter().map(|s| normalize_text(&s.text)).collect();
            if let Some(index) = first_divergence(&got, &expected) {
                errors.push(TrackError::TextMismatch { index });
            }
        }
        TrackKind::Gloss => {
            let expected: Vec<String> = tokenize_words(&normalize_text(reference_text));
            let mut got = Vec::with_capacity(segments.len());
            for (index, seg) in segments.iter().enumerate() {
                let tokens = tokenize_words(&normalize_text(&seg.text));
                if tokens.len() != 1 {
                    errors.push(TrackError::MultiwordGloss { index });
                }
                got.push(tokens.into_iter().next().unwrap_or_default());
            }
            let mismatch = if rules.free_gloss_labels {
                (got.len() != expected.len()).then(|| got.len().min(expected.len()))
            } else {
                first_divergence(&got, &expected)
            };
            if let Some(index) = mismatch {
                errors.push(TrackError::TextMismatch { index });
            }
        }
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
