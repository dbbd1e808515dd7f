//! Value types shared by every part of the platform.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use signcorpus_store::ObjectKey;

use crate::error::{Error, Result};
use crate::lifecycle::LifecycleState;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            /// A fresh random identifier.
            pub fn generate() -> Self {
                $name(uuid::Uuid::new_v4().simple().to_string())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

id_type!(UserId);
id_type!(PromptId);
id_type!(RecordingId);

/// `<spoken>-<sign>` language pair code such as `bn-BdSL` or `en-ASL`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let valid = s.split_once('-').is_some_and(|(spoken, sign)| {
            (2..=3).contains(&spoken.len())
                && spoken.bytes().all(|b| b.is_ascii_lowercase())
                && (2..=8).contains(&sign.len())
                && sign.bytes().all(|b| b.is_ascii_alphabetic())
        });
        if valid {
            Ok(LanguageCode(s.to_string()))
        } else {
            Err(Error::Invalid(format!("malformed language code {s:?}")))
        }
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> Self {
        code.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguagePair {
    pub code: LanguageCode,
    pub display_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContentType {
    /// Exact text the signer reproduces.
    Text,
    /// A subject the signer talks about spontaneously.
    Topic,
}

impl ContentType {
    pub fn as_str(self) -> &'static str {
        match self {
            ContentType::Text => "text",
            ContentType::Topic => "topic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Some(ContentType::Text),
            "topic" => Some(ContentType::Topic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: PromptId,
    pub content: String,
    pub content_type: ContentType,
    pub language: LanguageCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Contributor,
    Validator,
    Annotator,
    Admin,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Contributor => "contributor",
            Role::Validator => "validator",
            Role::Annotator => "annotator",
            Role::Admin => "admin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "contributor" => Some(Role::Contributor),
            "validator" => Some(Role::Validator),
            "annotator" => Some(Role::Annotator),
            "admin" => Some(Role::Admin),
            _ => None,
        }
    }

    /// Roles a self-registered account starts with.
    pub fn crowd_defaults() -> BTreeSet<Role> {
        [Role::Contributor, Role::Validator, Role::Annotator].into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Other,
    Undisclosed,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Other => "other",
            Gender::Undisclosed => "undisclosed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "female" => Some(Gender::Female),
            "male" => Some(Gender::Male),
            "other" => Some(Gender::Other),
            "undisclosed" => Some(Gender::Undisclosed),
            _ => None,
        }
    }
}

pub const MIN_AGE: u8 = 5;
pub const MAX_AGE: u8 = 120;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: UserId,
    pub username: String,
    pub selected_language: LanguageCode,
    pub gender: Option<Gender>,
    pub age: Option<u8>,
    pub locality: Option<String>,
    pub roles: BTreeSet<Role>,
}

impl UserProfile {
    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    pub fn require(&self, role: Role) -> Result<()> {
        if self.has_role(role) {
            Ok(())
        } else {
            Err(Error::Role(role.as_str()))
        }
    }
}

pub fn check_age(age: Option<u8>) -> Result<()> {
    match age {
        Some(a) if !(MIN_AGE..=MAX_AGE).contains(&a) => Err(Error::Invalid(format!(
            "age {a} outside [{MIN_AGE}, {MAX_AGE}]"
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lighting {
    Indoor,
    Outdoor,
    LowLight,
    Studio,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraView {
    Front,
    Left,
    Right,
    Top,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

/// Frame rate as a positive rational, e.g. `30` or `30000/1001`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fps {
    num: u32,
    den: u32,
}

impl Fps {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Invalid(format!("fps {num}/{den} must be positive")));
        }
        Ok(Fps { num, den })
    }

    pub fn whole(fps: u32) -> Result<Self> {
        Fps::new(fps, 1)
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    /// Whole frames contained in `duration_ms`, rounded down.
    pub fn frames_in(self, duration_ms: i64) -> u64 {
        let ms = duration_ms.max(0) as u128;
        (ms * self.num as u128 / (1000 * self.den as u128)) as u64
    }
}

impl fmt::Display for Fps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Fps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed fps {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => Fps::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => Fps::whole(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

// Whole rates travel as JSON numbers, fractional ones as "num/den" strings.
impl Serialize for Fps {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.den == 1 {
            serializer.serialize_u32(self.num)
        } else {
            serializer.collect_str(self)
        }
    }
}

impl<'de> Deserialize<'de> for Fps {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Whole(u32),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Whole(n) => Fps::whole(n),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub lighting: Lighting,
    pub camera_view: CameraView,
    pub resolution: Resolution,
    pub duration_ms: i64,
    pub fps: Fps,
    pub container: String,
}

/// Metadata as submitted from the recording form; every field may be absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoMetaInput {
    pub lighting: Option<Lighting>,
    pub camera_view: Option<CameraView>,
    pub resolution: Option<Resolution>,
    pub duration_ms: Option<i64>,
    pub fps: Option<Fps>,
    pub container: Option<String>,
}

impl VideoMetaInput {
    /// Checks the mandatory form fields. `default_container` is used when the
    /// client did not name one.
    pub fn complete(self, default_container: &str) -> Result<VideoMeta> {
        let resolution = self.resolution.ok_or(Error::MissingMeta("resolution"))?;
        if resolution.width == 0 || resolution.height == 0 {
            return Err(Error::MissingMeta("resolution"));
        }
        let duration_ms = self
            .duration_ms
            .filter(|d| *d > 0)
            .ok_or(Error::MissingMeta("duration_ms"))?;
        Ok(VideoMeta {
            lighting: self.lighting.ok_or(Error::MissingMeta("lighting"))?,
            camera_view: self.camera_view.ok_or(Error::MissingMeta("camera_view"))?,
            resolution,
            duration_ms,
            fps: self.fps.ok_or(Error::MissingMeta("fps"))?,
            container: self
                .container
                .filter(|c| !c.trim().is_empty())
                .unwrap_or_else(|| default_container.to_string()),
        })
    }
}

/// Retained `[start_ms, end_ms)` window of a raw recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrimWindow {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl TrimWindow {
    pub fn new(start_ms: i64, end_ms: i64) -> Self {
        TrimWindow { start_ms, end_ms }
    }

    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }
}

/// Accepts `trim` iff `0 <= start < end <= duration_ms`.
pub fn validate_trim(trim: TrimWindow, duration_ms: i64) -> Result<TrimWindow> {
    if trim.start_ms >= trim.end_ms {
        return Err(Error::TrimOrder {
            start_ms: trim.start_ms,
            end_ms: trim.end_ms,
        });
    }
    if trim.start_ms < 0 || trim.end_ms > duration_ms {
        return Err(Error::TrimBounds {
            start_ms: trim.start_ms,
            end_ms: trim.end_ms,
            duration_ms,
        });
    }
    Ok(trim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub id: RecordingId,
    pub prompt_id: PromptId,
    pub signer_id: UserId,
    pub video_key: ObjectKey,
    pub meta: VideoMeta,
    pub trim: TrimWindow,
    pub state: LifecycleState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keypoints_key: Option<ObjectKey>,
    /// Bumped on every state or field change.
    pub version: u64,
    pub created_at: DateTime<Utc>,
}

/// Media type recorded for a video key without an explicit container.
pub fn container_for_key(key: &ObjectKey) -> &'static str {
    match key.ext() {
        ".mp4" => "video/mp4",
        _ => "video/webm",
    }
}
