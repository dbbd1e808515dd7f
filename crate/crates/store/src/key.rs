use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::StoreError;

/// Extensions accepted for video objects.
pub const VIDEO_EXTS: [&str; 2] = [".webm", ".mp4"];
/// Extension used for keypoint sidecars.
pub const KEYPOINT_EXT: &str = ".jsonl";

/// Which namespace an object lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKind {
    Video,
    Keypoints,
}

impl ObjectKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ObjectKind::Video => "videos",
            ObjectKind::Keypoints => "keypoints",
        }
    }

    /// Resolves the namespace for an extension, or `E_BAD_EXT`.
    pub fn for_ext(ext: &str) -> Result<Self, StoreError> {
        if VIDEO_EXTS.contains(&ext) {
            Ok(ObjectKind::Video)
        } else if ext == KEYPOINT_EXT {
            Ok(ObjectKind::Keypoints)
        } else {
            Err(StoreError::BadExt(ext.to_string()))
        }
    }
}

/// A content address: `videos/<sha256><ext>` or `keypoints/<sha256>.jsonl`.
///
/// Keys can only be obtained from [`key_for`], from a digest via
/// [`ObjectKey::from_digest`], or by parsing a well-formed string, so a key
/// always names exactly one byte sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectKey {
    kind: ObjectKind,
    digest: String,
    ext: String,
}

impl ObjectKey {
    pub fn from_digest(digest: [u8; 32], ext: &str) -> Result<Self, StoreError> {
        let kind = ObjectKind::for_ext(ext)?;
        Ok(ObjectKey {
            kind,
            digest: hex::encode(digest),
            ext: ext.to_string(),
        })
    }

    pub fn kind(&self) -> ObjectKind {
        self.kind
    }

    /// Lowercase hex SHA-256 of the object's bytes.
    pub fn digest_hex(&self) -> &str {
        &self.digest
    }

    pub fn ext(&self) -> &str {
        &self.ext
    }

    /// The key as a relative slash-separated path.
    pub fn as_path(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}{}", self.kind.prefix(), self.digest, self.ext)
    }
}

impl FromStr for ObjectKey {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StoreError::BadKey(s.to_string());
        let (prefix, name) = s.split_once('/').ok_or_else(bad)?;
        let dot = name.find('.').ok_or_else(bad)?;
        let (digest, ext) = name.split_at(dot);
        let kind = ObjectKind::for_ext(ext).map_err(|_| bad())?;
        if kind.prefix() != prefix
            || digest.len() != 64
            || !digest.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        {
            return Err(bad());
        }
        Ok(ObjectKey {
            kind,
            digest: digest.to_string(),
            ext: ext.to_string(),
        })
    }
}

impl serde::Serialize for ObjectKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ObjectKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Computes the content address of `bytes` stored with extension `ext`.
pub fn key_for(bytes: &[u8], ext: &str) -> Result<ObjectKey, StoreError> {
    ObjectKey::from_digest(Sha256::digest(bytes).into(), ext)
}
