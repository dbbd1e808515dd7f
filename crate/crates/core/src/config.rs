//! Deployment configuration: a TOML file with `STORE_*` environment overrides.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! database = "data/corpus.db"
//! topic_sentence_count = 5
//!
//! [storage]
//! backend = "local"
//! root = "data/objects"
//!
//! [languages]
//! "bn-BdSL" = "Bangla / Bangladeshi Sign Language"
//! "en-ASL" = "English / American Sign Language"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use signcorpus_store::{S3Config, StoreConfig, DEFAULT_MAX_OBJECT_BYTES};

use crate::annotation::TrackRules;
use crate::assignment::{AssignmentPolicy, SelectionPolicy};
use crate::domain::{LanguageCode, LanguagePair};

/// Names the offending key so operators can fix the file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSettings {
    #[serde(default = "default_backend")]
    pub backend: String,
    pub root: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub bucket: Option<String>,
    pub key_id: Option<String>,
    pub secret: Option<String>,
    pub region: Option<String>,
    pub spool_dir: Option<PathBuf>,
}

fn default_backend() -> String {
    "local".into()
}

impl Default for StorageSettings {
    fn default() -> Self {
        StorageSettings {
            backend: default_backend(),
            root: None,
            endpoint: None,
            bucket: None,
            key_id: None,
            secret: None,
            region: None,
            spool_dir: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_database")]
    pub database: PathBuf,
    #[serde(default)]
    pub storage: StorageSettings,
    /// Language pair code to display name.
    pub languages: BTreeMap<String, String>,
    #[serde(default = "default_topic_sentence_count")]
    pub topic_sentence_count: usize,
    #[serde(default = "default_quorum")]
    pub quorum: u32,
    #[serde(default)]
    pub allow_repeat_recordings: bool,
    #[serde(default)]
    pub assignment_policy: SelectionPolicy,
    #[serde(default)]
    pub free_gloss_labels: bool,
    #[serde(default = "default_lease_ttl_s")]
    pub lease_ttl_s: u64,
    #[serde(default = "default_session_ttl_hours")]
    pub session_ttl_hours: u64,
    #[serde(default = "default_max_upload_bytes")]
    pub max_upload_bytes: u64,
    #[serde(default = "default_max_csv_bytes")]
    pub max_csv_bytes: u64,
    /// Key for signer pseudonyms in exports. Changing it changes every
    /// exported signer id.
    #[serde(default = "default_pseudonym_secret")]
    pub pseudonym_secret: String,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_database() -> PathBuf {
    "corpus.db".into()
}
fn default_topic_sentence_count() -> usize {
    5
}
fn default_quorum() -> u32 {
    1
}
fn default_lease_ttl_s() -> u64 {
    1800
}
fn default_session_ttl_hours() -> u64 {
    72
}
fn default_max_upload_bytes() -> u64 {
    DEFAULT_MAX_OBJECT_BYTES
}
fn default_max_csv_bytes() -> u64 {
    10 * 1024 * 1024
}
fn default_pseudonym_secret() -> String {
    "change-me".into()
}

impl Settings {
    /// Settings for tests and examples: the given languages, local storage.
    pub fn for_languages(codes: &[&str]) -> Self {
        let languages = codes.iter().map(|c| (c.to_string(), c.to_string())).collect();
        let mut settings: Settings = toml::from_str("languages = {}").expect("minimal config parses");
        settings.languages = languages;
        settings
    }

    /// Parses a config file body, applies environment overrides, validates.
    pub fn from_toml(text: &str, env: &dyn Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut settings: Settings = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = unknown_field(&message).unwrap_or_else(|| "<file>".to_string());
            ConfigError::new(key, message)
        })?;
        settings.apply_env(env);
        settings.validate()?;
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut settings = Self::from_toml(&text, &|k| std::env::var(k).ok())?;
        settings.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        Ok(settings)
    }

    fn apply_env(&mut self, env: &dyn Fn(&str) -> Option<String>) {
        let s = &mut self.storage;
        if let Some(v) = env("STORE_ENDPOINT") {
            s.endpoint = Some(v);
        }
        if let Some(v) = env("STORE_BUCKET") {
            s.bucket = Some(v);
        }
        if let Some(v) = env("STORE_KEY_ID") {
            s.key_id = Some(v);
        }
        if let Some(v) = env("STORE_SECRET") {
            s.secret = Some(v);
        }
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.database);
        if let Some(root) = self.storage.root.as_mut() {
            fix(root);
        }
        if let Some(spool) = self.storage.spool_dir.as_mut() {
            fix(spool);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.languages.is_empty() {
            return Err(ConfigError::new("languages", "at least one language pair is required"));
        }
        for code in self.languages.keys() {
            code.parse::<LanguageCode>()
                .map_err(|_| ConfigError::new(format!("languages.{code}"), "expected <spoken>-<sign>, e.g. bn-BdSL"))?;
        }
        if self.topic_sentence_count == 0 {
            return Err(ConfigError::new("topic_sentence_count", "must be at least 1"));
        }
        if self.quorum == 0 {
            return Err(ConfigError::new("quorum", "must be at least 1"));
        }
        if self.lease_ttl_s == 0 {
            return Err(ConfigError::new("lease_ttl_s", "must be positive"));
        }
        if self.listen.parse::<std::net::SocketAddr>().is_err() {
            return Err(ConfigError::new("listen", format!("{:?} is not host:port", self.listen)));
        }
        self.store_config().map(|_| ())
    }

    pub fn store_config(&self) -> Result<StoreConfig, ConfigError> {
        let s = &self.storage;
        match s.backend.as_str() {
            "local" => Ok(StoreConfig::Local {
                root: s.root.clone().unwrap_or_else(|| "objects".into()),
            }),
            "s3" => {
                let need = |v: &Option<String>, key: &str| {
                    v.clone()
                        .filter(|v| !v.is_empty())
                        .ok_or_else(|| ConfigError::new(format!("storage.{key}"), "required for the s3 backend"))
                };
                Ok(StoreConfig::S3(S3Config {
                    endpoint: need(&s.endpoint, "endpoint")?,
                    bucket: need(&s.bucket, "bucket")?,
                    key_id: need(&s.key_id, "key_id")?,
                    secret: need(&s.secret, "secret")?,
                    region: s.region.clone().unwrap_or_else(|| "us-east-1".into()),
                    spool_dir: s.spool_dir.clone().unwrap_or_else(std::env::temp_dir),
                }))
            }
            other => Err(ConfigError::new(
                "storage.backend",
                format!("{other:?} is not one of \"local\", \"s3\""),
            )),
        }
    }

    pub fn language_pairs(&self) -> Vec<LanguagePair> {
        self.languages
            .iter()
            .filter_map(|(code, name)| {
                Some(LanguagePair {
                    code: code.parse().ok()?,
                    display_name: name.clone(),
                })
            })
            .collect()
    }

    pub fn is_configured(&self, code: &LanguageCode) -> bool {
        self.languages.contains_key(code.as_str())
    }

    pub fn assignment_policy(&self) -> AssignmentPolicy {
        AssignmentPolicy {
            allow_repeat_recordings: self.allow_repeat_recordings,
            selection: self.assignment_policy,
        }
    }

    pub fn track_rules(&self) -> TrackRules {
        TrackRules {
            free_gloss_labels: self.free_gloss_labels,
        }
    }
}

/// Extracts `foo` from serde's "unknown field `foo`, expected ..." message.
fn unknown_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest.split('`').next()?.to_string())
}
