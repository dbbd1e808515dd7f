//! Manifest records and the corpus statistics computed over them.

use std::collections::{BTreeMap, HashSet};

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use signcorpus_store::ObjectKey;

use crate::domain::{
    CameraView, ContentType, Fps, Gender, LanguageCode, Lighting, RecordingId, Resolution, TrimWindow, UserId,
};
use crate::text::{tokenize_words, word_key};

pub const LICENSE: &str = "CC-BY-SA-4.0";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPrompt {
    pub content: String,
    pub content_type: ContentType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub gender: Option<Gender>,
    /// Five-year band such as `"25-29"`; exact ages are never exported.
    pub age_band: Option<String>,
    pub locality: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub lighting: Lighting,
    pub camera_view: CameraView,
    pub resolution: Resolution,
    pub fps: Fps,
    pub duration_ms: i64,
}

/// One exported recording. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub recording_id: RecordingId,
    pub signer: String,
    pub language: LanguageCode,
    pub prompt: ManifestPrompt,
    pub script: Option<String>,
    pub demographics: Demographics,
    pub meta: ManifestMeta,
    pub trim: TrimWindow,
    pub video: ObjectKey,
    /// Track kind (`sentence`/`gloss`) to `.srt` path inside the snapshot.
    pub subtitles: BTreeMap<String, String>,
    pub keypoints: Option<ObjectKey>,
    pub license: String,
}

impl ManifestEntry {
    /// Text the recording signs: the prompt for text prompts, the typed
    /// script for topic prompts.
    pub fn transcript(&self) -> &str {
        match self.prompt.content_type {
            ContentType::Text => &self.prompt.content,
            ContentType::Topic => self.script.as_deref().unwrap_or(""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub recording_count: u64,
    pub scripted_count: u64,
    pub spontaneous_count: u64,
    pub total_duration_hours: f64,
    pub total_words: u64,
    pub unique_words: u64,
    pub avg_words_per_recording: Option<f64>,
    pub avg_duration_s: Option<f64>,
}

pub fn compute_stats(entries: &[ManifestEntry]) -> CorpusStats {
    let mut scripted = 0u64;
    let mut total_words = 0u64;
    let mut total_ms = 0i64;
    let mut vocabulary = HashSet::new();
    for entry in entries {
        if entry.prompt.content_type == ContentType::Text {
            scripted += 1;
        }
        let tokens = tokenize_words(entry.transcript());
        total_words += tokens.len() as u64;
        vocabulary.extend(tokens.iter().map(|t| word_key(t)));
        total_ms += entry.trim.duration_ms();
    }
    let count = entries.len() as u64;
    let avg = |total: f64| (count > 0).then(|| total / count as f64);
    CorpusStats {
        recording_count: count,
        scripted_count: scripted,
        spontaneous_count: count - scripted,
        total_duration_hours: total_ms as f64 / 3_600_000.0,
        total_words,
        unique_words: vocabulary.len() as u64,
        avg_words_per_recording: avg(total_words as f64),
        avg_duration_s: avg(total_ms as f64 / 1000.0),
    }
}

impl CorpusStats {
    /// `key: value` lines; reals to three decimals, absent averages as `null`.
    pub fn to_lines(&self) -> String {
        let real = |v: Option<f64>| v.map_or_else(|| "null".to_string(), |v| format!("{v:.3}"));
        format!(
            "recording_count: {}\nscripted_count: {}\nspontaneous_count: {}\ntotal_duration_hours: {}\n\
             total_words: {}\nunique_words: {}\navg_words_per_recording: {}\navg_duration_s: {}\n",
            self.recording_count,
            self.scripted_count,
            self.spontaneous_count,
            real(Some(self.total_duration_hours)),
            self.total_words,
            self.unique_words,
            real(self.avg_words_per_recording),
            real(self.avg_duration_s),
        )
    }
}

/// Five-year band containing `age`, e.g. 27 → `"25-29"`.
pub fn age_band(age: u8) -> String {
    let low = age / 5 * 5;
    format!("{low}-{}", low + 4)
}

/// Lower bound of a band produced by [`age_band`].
pub fn age_band_floor(band: &str) -> Option<u8> {
    band.split_once('-')?.0.parse().ok()
}

/// Stable keyed pseudonym for a user id.
pub fn pseudonym(secret: &[u8], user: &UserId) -> String {
    let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(secret).expect("hmac accepts any key length");
    mac.update(user.as_str().as_bytes());
    format!("s-{}", hex::encode(&mac.finalize().into_bytes()[..16]))
}
