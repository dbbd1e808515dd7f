//! Small-world fixtures shared by the integration and acceptance tests.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use signcorpus_store::{LocalStore, ObjectKey, ObjectStore};
use tempfile::TempDir;

use crate::annotation::{Segment, TrackKind};
use crate::config::Settings;
use crate::domain::{
    CameraView, Fps, Gender, LanguageCode, Lighting, Prompt, Recording, Resolution, Role, TrimWindow, UserProfile,
    VideoMetaInput,
};
use crate::platform::{NewRecording, NewUser, TrackInput};
use crate::repo::Repo;
use crate::text::{split_sentences, tokenize_words};
use crate::Platform;

pub const BANGLA: &str = "bn-BdSL";
pub const ENGLISH: &str = "en-ASL";
pub const PASSWORD: &str = "correct horse battery";

pub struct World {
    pub platform: Arc<Platform>,
    pub dir: TempDir,
}

static VIDEO_COUNTER: AtomicU64 = AtomicU64::new(0);

impl World {
    pub fn new() -> Self {
        Self::with(|_| {})
    }

    /// A fresh deployment with both default language pairs and local storage
    /// in a temporary directory.
    pub fn with(configure: impl FnOnce(&mut Settings)) -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut settings = Settings::for_languages(&[BANGLA, ENGLISH]);
        settings.database = dir.path().join("corpus.db");
        settings.storage.root = Some(dir.path().join("objects"));
        configure(&mut settings);
        let store = Arc::new(
            LocalStore::open(dir.path().join("objects"), settings.max_upload_bytes).expect("local store"),
        );
        let repo = Repo::in_memory().expect("repo");
        World {
            platform: Arc::new(Platform::new(repo, store, settings)),
            dir,
        }
    }

    pub fn store(&self) -> &Arc<dyn ObjectStore> {
        self.platform.store()
    }

    /// Registers a user with the given roles (crowd roles when empty).
    pub fn user(&self, name: &str, language: &str, roles: &[Role]) -> UserProfile {
        let roles: BTreeSet<Role> = if roles.is_empty() {
            Role::crowd_defaults()
        } else {
            roles.iter().copied().collect()
        };
        self.platform
            .register(
                NewUser {
                    username: name.into(),
                    password: PASSWORD.into(),
                    selected_language: language.parse().expect("language code"),
                    gender: Some(Gender::Female),
                    age: Some(27),
                    locality: Some("Dhaka".into()),
                },
                roles,
            )
            .expect("register")
    }

    /// Ingests `(content, content_type, language)` rows and returns all prompts.
    pub fn prompts(&self, rows: &[(&str, &str, &str)]) -> Vec<Prompt> {
        let mut csv = String::from("content,content_type,language\n");
        for (content, kind, lang) in rows {
            csv.push_str(&format!("\"{}\",{kind},{lang}\n", content.replace('"', "\"\"")));
        }
        let report = self.platform.ingest_csv(csv.as_bytes()).expect("ingest");
        assert!(report.errors.is_empty(), "{report:?}");
        let mut prompts = self.platform.prompts().expect("prompts");
        prompts.sort_by_key(|p| rows.iter().position(|r| r.0 == p.content));
        prompts
    }

    /// Uploads a distinct fake video.
    pub async fn upload(&self) -> ObjectKey {
        let n = VIDEO_COUNTER.fetch_add(1, Ordering::Relaxed);
        let body = format!("fake webm {n} {}", uuid::Uuid::new_v4());
        self.store().put_object(body.into_bytes().into(), ".webm").await.expect("upload")
    }

    pub async fn record(&self, signer: &UserProfile, prompt: &Prompt, duration_ms: i64) -> Recording {
        let key = self.upload().await;
        self.platform
            .submit_recording(signer, new_recording(prompt, key, duration_ms), None)
            .await
            .expect("submit recording")
    }
}

impl Default for World {
    fn default() -> Self {
        Self::new()
    }
}

pub fn meta(duration_ms: i64) -> VideoMetaInput {
    VideoMetaInput {
        lighting: Some(Lighting::Indoor),
        camera_view: Some(CameraView::Front),
        resolution: Some(Resolution { width: 1280, height: 720 }),
        duration_ms: Some(duration_ms),
        fps: Some(Fps::whole(30).expect("fps")),
        container: None,
    }
}

/// A submission trimming 100 ms off each end.
pub fn new_recording(prompt: &Prompt, key: ObjectKey, duration_ms: i64) -> NewRecording {
    NewRecording {
        prompt_id: prompt.id.clone(),
        key,
        meta: meta(duration_ms),
        trim: TrimWindow::new(100, duration_ms - 100),
        annotation: None,
    }
}

/// Evenly spaced, gap-free segments over `trim`, one per label.
pub fn spread(labels: &[String], trim: TrimWindow) -> Vec<Segment> {
    let n = labels.len().max(1) as i64;
    let step = trim.duration_ms() / n;
    labels
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let start = trim.start_ms + i as i64 * step;
            Segment::new(start, start + step, text.clone())
        })
        .collect()
}

pub fn sentence_track(reference: &str, language: &LanguageCode, trim: TrimWindow) -> TrackInput {
    TrackInput {
        kind: TrackKind::Sentence,
        segments: spread(&split_sentences(reference, language), trim),
    }
}

pub fn gloss_track(reference: &str, trim: TrimWindow) -> TrackInput {
    TrackInput {
        kind: TrackKind::Gloss,
        segments: spread(&tokenize_words(reference), trim),
    }
}

/// A topic script of `n` short sentences.
pub fn script(n: usize) -> String {
    (1..=n)
        .map(|i| format!("This is sentence number {i}."))
        .collect::<Vec<_>>()
        .join(" ")
}
