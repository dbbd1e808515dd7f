//! The platform service: persistence, object storage and settings bundled
//! behind the operations the HTTP API and the admin CLI expose.

mod accounts;
mod export;
mod prompts;
mod tasks;
mod workflow;

use std::sync::Arc;

use chrono::{DateTime, Utc};
use rusqlite::Transaction;
use serde::de::DeserializeOwned;
use serde::Serialize;
use signcorpus_store::ObjectStore;

use crate::config::Settings;
use crate::domain::UserId;
use crate::error::Result;
use crate::repo::{self, Repo};

pub use accounts::{NewUser, ProfileUpdate, Session};
pub use export::{ExportFilter, ExportReport, ImportReport, SNAPSHOT_DIR};
pub use tasks::Pool;
pub use workflow::{
    AnnotationInput, AnnotationValidationInput, AnnotationVerdict, Corrections, NewRecording, RecordingView,
    StateResponse, TrackInput, VideoValidationInput, VideoVerdict,
};

pub struct Platform {
    repo: Repo,
    store: Arc<dyn ObjectStore>,
    settings: Settings,
}

impl Platform {
    pub fn new(repo: Repo, store: Arc<dyn ObjectStore>, settings: Settings) -> Self {
        Platform { repo, store, settings }
    }

    /// Opens the database and object store named by `settings`.
    pub fn open(settings: Settings) -> Result<Self> {
        let repo = Repo::open(&settings.database)?;
        let store_config = settings
            .store_config()
            .map_err(|e| crate::Error::Invalid(e.to_string()))?;
        let store = signcorpus_store::open(&store_config, settings.max_upload_bytes)?;
        Ok(Platform::new(repo, store, settings))
    }

    pub fn repo(&self) -> &Repo {
        &self.repo
    }

    pub fn store(&self) -> &Arc<dyn ObjectStore> {
        &self.store
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Runs `op` unless `(user, op_name, key)` already has a stored result, in
/// which case that result is returned instead. Only successes are stored.
fn idempotent<T: Serialize + DeserializeOwned>(
    tx: &Transaction<'_>,
    user: &UserId,
    op_name: &str,
    key: Option<&str>,
    op: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let Some(key) = key else {
        return op();
    };
    let scope = format!("{user}/{op_name}");
    if let Some(stored) = repo::idem_get(tx, &scope, key)? {
        return Ok(serde_json::from_str(&stored)?);
    }
    let out = op()?;
    repo::idem_put(tx, &scope, key, &serde_json::to_string(&out)?)?;
    Ok(out)
}

fn replayed<T: DeserializeOwned>(tx: &Transaction<'_>, user: &UserId, op_name: &str, key: Option<&str>) -> Result<Option<T>> {
    let Some(key) = key else {
        return Ok(None);
    };
    repo::idem_get(tx, &format!("{user}/{op_name}"), key)?
        .map(|s| serde_json::from_str(&s).map_err(Into::into))
        .transpose()
}
