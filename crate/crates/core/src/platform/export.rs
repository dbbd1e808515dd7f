use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use rusqlite::{params, Connection, OptionalExtension};
use serde::Serialize;

use super::accounts::insert_user;
use super::Platform;
use crate::annotation::{AnnotationTrack, TrackKind};
use crate::domain::{
    container_for_key, LanguageCode, Prompt, PromptId, Recording, RecordingId, UserId, UserProfile, VideoMeta,
};
use crate::error::{Error, Result};
use crate::ingest::dedupe_key;
use crate::lifecycle::{transition, LifecycleEvent, LifecycleState};
use crate::repo;
use crate::srt::{parse_srt_for_trim, render_srt};
use crate::stats::{
    age_band, age_band_floor, compute_stats, pseudonym, CorpusStats, Demographics, ManifestEntry, ManifestMeta,
    ManifestPrompt, LICENSE,
};

/// Top-level directory snapshots are written under.
pub const SNAPSHOT_DIR: &str = "snapshot";
const MANIFEST: &str = "manifest.jsonl";
const IMPORT_USER: &str = "snapshot-import";

#[derive(Debug, Clone, Default)]
pub struct ExportFilter {
    pub language: Option<LanguageCode>,
    /// Inclusive lower bound on `created_at`.
    pub from: Option<DateTime<Utc>>,
    /// Exclusive upper bound on `created_at`.
    pub to: Option<DateTime<Utc>>,
}

impl ExportFilter {
    fn matches(&self, rec: &Recording, prompt: &Prompt) -> bool {
        self.language.as_ref().is_none_or(|l| *l == prompt.language)
            && self.from.is_none_or(|t| rec.created_at >= t)
            && self.to.is_none_or(|t| rec.created_at < t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExportReport {
    pub dir: PathBuf,
    pub exported: usize,
    /// Recordings matching the filter, per lifecycle state.
    pub by_state: BTreeMap<LifecycleState, usize>,
    pub rejected_excluded: usize,
    /// Nothing matched; the manifest is empty.
    pub empty: bool,
    pub stats: CorpusStats,
}

impl ExportReport {
    pub fn to_lines(&self) -> String {
        let mut out = format!(
            "snapshot: {}\nexported: {}\nrejected_excluded: {}\n",
            self.dir.display(),
            self.exported,
            self.rejected_excluded
        );
        for state in LifecycleState::ALL {
            out.push_str(&format!("state.{state}: {}\n", self.by_state.get(&state).copied().unwrap_or(0)));
        }
        if self.empty {
            out.push_str("warning: E_EMPTY no validated recordings matched the filter\n");
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ImportReport {
    pub recordings: usize,
    pub users_created: usize,
    pub prompts_created: usize,
}

struct Collected {
    entries: Vec<ManifestEntry>,
    /// Snapshot-relative path and body of every subtitle file.
    subtitles: Vec<(String, String)>,
    by_state: BTreeMap<LifecycleState, usize>,
}

fn subtitle_path(rid: &RecordingId, kind: TrackKind) -> String {
    format!("subtitles/{rid}.{}.srt", kind.as_str())
}

fn signer_pseudonym(tx: &Connection, secret: &str, user: &UserId) -> Result<String> {
    let stored: Option<String> = tx
        .query_row("SELECT pseudonym FROM users WHERE id = ?1", [user.as_str()], |r| r.get(0))
        .optional()?
        .flatten();
    Ok(stored.unwrap_or_else(|| pseudonym(secret.as_bytes(), user)))
}

impl Platform {
    fn collect(&self, tx: &Connection, filter: &ExportFilter, render: bool) -> Result<Collected> {
        let mut out = Collected {
            entries: Vec::new(),
            subtitles: Vec::new(),
            by_state: BTreeMap::new(),
        };
        let mut prompts: HashMap<PromptId, Prompt> = HashMap::new();
        for rec in repo::all_recordings(tx)? {
            if !prompts.contains_key(&rec.prompt_id) {
                let p = repo::get_prompt(tx, &rec.prompt_id)?.ok_or_else(|| Error::NoPrompt(rec.prompt_id.to_string()))?;
                prompts.insert(p.id.clone(), p);
            }
            let prompt = &prompts[&rec.prompt_id];
            if !filter.matches(&rec, prompt) {
                continue;
            }
            *out.by_state.entry(rec.state).or_default() += 1;
            if rec.state != LifecycleState::AnnotationValidated {
                continue;
            }
            let signer = repo::require_user(tx, &rec.signer_id)?;
            let mut subtitles = BTreeMap::new();
            for track in repo::active_tracks(tx, &rec.id)? {
                let path = subtitle_path(&rec.id, track.kind);
                if render {
                    out.subtitles.push((path.clone(), render_srt(&track, rec.trim)?));
                }
                subtitles.insert(track.kind.as_str().to_string(), path);
            }
            out.entries.push(ManifestEntry {
                recording_id: rec.id.clone(),
                signer: signer_pseudonym(tx, &self.settings.pseudonym_secret, &signer.id)?,
                language: prompt.language.clone(),
                prompt: ManifestPrompt {
                    content: prompt.content.clone(),
                    content_type: prompt.content_type,
                },
                script: rec.script.clone(),
                demographics: Demographics {
                    gender: signer.gender,
                    age_band: signer.age.map(age_band),
                    locality: signer.locality.clone(),
                },
                meta: ManifestMeta {
                    lighting: rec.meta.lighting,
                    camera_view: rec.meta.camera_view,
                    resolution: rec.meta.resolution,
                    fps: rec.meta.fps,
                    duration_ms: rec.meta.duration_ms,
                },
                trim: rec.trim,
                video: rec.video_key.clone(),
                subtitles,
                keypoints: rec.keypoints_key.clone(),
                license: LICENSE.to_string(),
            });
        }
        out.entries.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));
        Ok(out)
    }

    /// Manifest entries for every validated recording passing `filter`.
    pub fn manifest_entries(&self, filter: &ExportFilter) -> Result<Vec<ManifestEntry>> {
        Ok(self.repo.tx(|tx| self.collect(tx, filter, false))?.entries)
    }

    pub fn corpus_stats(&self, filter: &ExportFilter) -> Result<CorpusStats> {
        Ok(compute_stats(&self.manifest_entries(filter)?))
    }

    /// Writes `out/snapshot/<date>/` with the manifest, subtitles, videos and
    /// keypoint sidecars of the matching validated recordings.
    pub async fn export_snapshot(&self, filter: &ExportFilter, out: &Path, date: NaiveDate) -> Result<ExportReport> {
        let collected = self.repo.tx(|tx| self.collect(tx, filter, true))?;
        let dir = out.join(SNAPSHOT_DIR).join(date.format("%Y-%m-%d").to_string());
        if tokio::fs::try_exists(dir.join(MANIFEST)).await? {
            return Err(Error::Conflict(format!("{} already holds a snapshot", dir.display())));
        }
        for sub in ["subtitles", "videos", "keypoints"] {
            tokio::fs::create_dir_all(dir.join(sub)).await?;
        }
        for (path, body) in &collected.subtitles {
            tokio::fs::write(dir.join(path), body).await?;
        }
        let mut manifest = String::new();
        for entry in &collected.entries {
            self.store.copy_to_path(&entry.video, &dir.join(entry.video.as_path())).await?;
            if let Some(key) = &entry.keypoints {
                self.store.copy_to_path(key, &dir.join(key.as_path())).await?;
            }
            manifest.push_str(&serde_json::to_string(entry)?);
            manifest.push('\n');
        }
        let tmp = dir.join(format!(".{MANIFEST}.partial"));
        tokio::fs::write(&tmp, manifest).await?;
        tokio::fs::rename(&tmp, dir.join(MANIFEST)).await?;

        let exported = collected.entries.len();
        Ok(ExportReport {
            dir,
            exported,
            rejected_excluded: collected.by_state.get(&LifecycleState::VideoRejected).copied().unwrap_or(0),
            by_state: collected.by_state,
            empty: exported == 0,
            stats: compute_stats(&collected.entries),
        })
    }

    /// Loads a snapshot written by [`Platform::export_snapshot`] into this
    /// (normally empty) deployment. Signers keep their pseudonyms and get the
    /// lower bound of their age band; exporting again yields the same manifest.
    pub async fn import_snapshot(&self, dir: &Path) -> Result<ImportReport> {
        let text = tokio::fs::read_to_string(dir.join(MANIFEST)).await?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let entry: ManifestEntry = serde_json::from_str(line)
                .map_err(|e| Error::Invalid(format!("{MANIFEST} line {}: {e}", i + 1)))?;
            entries.push(entry);
        }

        let mut tracks: Vec<Vec<(TrackKind, Vec<crate::annotation::Segment>)>> = Vec::new();
        for entry in &entries {
            let video = tokio::fs::read(dir.join(entry.video.as_path())).await?;
            let key = self.store.put_object(video.into(), entry.video.ext()).await?;
            if key != entry.video {
                return Err(Error::Invalid(format!("video for {} does not match its key", entry.recording_id)));
            }
            if let Some(kp) = &entry.keypoints {
                let body = tokio::fs::read(dir.join(kp.as_path())).await?;
                if self.store.put_object(body.into(), kp.ext()).await? != *kp {
                    return Err(Error::Invalid(format!("keypoints for {} do not match their key", entry.recording_id)));
                }
            }
            let mut parsed = Vec::new();
            for (kind, path) in &entry.subtitles {
                let kind = TrackKind::parse(kind).ok_or_else(|| Error::Invalid(format!("unknown track kind {kind:?}")))?;
                let body = tokio::fs::read_to_string(dir.join(path)).await?;
                parsed.push((kind, parse_srt_for_trim(&body, entry.trim)?));
            }
            if parsed.is_empty() {
                return Err(Error::Invalid(format!("{} has no subtitle tracks", entry.recording_id)));
            }
            tracks.push(parsed);
        }

        self.repo.tx(|tx| {
            let now = self.now();
            let mut report = ImportReport::default();
            let importer = self.import_user(tx, now, &mut report)?;
            for (entry, entry_tracks) in entries.iter().zip(tracks) {
                if repo::get_recording(tx, &entry.recording_id)?.is_some() {
                    return Err(Error::Conflict(format!("recording {} already exists", entry.recording_id)));
                }
                let signer = self.signer_for(tx, entry, now, &mut report)?;
                let key = dedupe_key(&entry.prompt.content, entry.prompt.content_type, &entry.language);
                let prompt = match repo::prompt_by_dedupe_key(tx, &key)? {
                    Some(p) => p,
                    None => {
                        let p = Prompt {
                            id: PromptId::generate(),
                            content: entry.prompt.content.clone(),
                            content_type: entry.prompt.content_type,
                            language: entry.language.clone(),
                        };
                        repo::insert_prompt(tx, &p, &key, now)?;
                        report.prompts_created += 1;
                        p
                    }
                };
                let track_values: Vec<AnnotationTrack> = entry_tracks
                    .into_iter()
                    .map(|(kind, segments)| AnnotationTrack {
                        kind,
                        segments,
                        recording_id: entry.recording_id.clone(),
                        annotator_id: importer.clone(),
                    })
                    .collect();
                let reference = entry.transcript();
                self.validate_imported(&track_values, entry, reference, &prompt)?;

                let path = [
                    LifecycleEvent::VideoSubmitted,
                    LifecycleEvent::VideoVerdictCorrect,
                    LifecycleEvent::AnnotationSubmitted,
                    LifecycleEvent::AnnotationVerdictAccepted,
                ];
                let mut state = LifecycleState::INITIAL;
                let mut steps = vec![(path[0], None, state)];
                for event in &path[1..] {
                    let next = transition(state, *event)?;
                    steps.push((*event, Some(state), next));
                    state = next;
                }
                let rec = Recording {
                    id: entry.recording_id.clone(),
                    prompt_id: prompt.id.clone(),
                    signer_id: signer,
                    video_key: entry.video.clone(),
                    meta: VideoMeta {
                        lighting: entry.meta.lighting,
                        camera_view: entry.meta.camera_view,
                        resolution: entry.meta.resolution,
                        duration_ms: entry.meta.duration_ms,
                        fps: entry.meta.fps,
                        container: container_for_key(&entry.video).to_string(),
                    },
                    trim: entry.trim,
                    state,
                    script: entry.script.clone(),
                    keypoints_key: entry.keypoints.clone(),
                    version: 0,
                    created_at: now,
                };
                repo::insert_recording(tx, &rec, None)?;
                for (event, from, to) in steps {
                    repo::insert_event(tx, &rec.id, event, from, to, &importer, now)?;
                }
                for track in &track_values {
                    repo::insert_track(tx, track, now)?;
                }
                report.recordings += 1;
            }
            Ok(report)
        })
    }

    fn validate_imported(&self, tracks: &[AnnotationTrack], entry: &ManifestEntry, reference: &str, prompt: &Prompt) -> Result<()> {
        for track in tracks {
            crate::annotation::validate_track(track, entry.trim, reference, &prompt.language, self.settings.track_rules())
                .map_err(Error::Track)?;
        }
        Ok(())
    }

    fn import_user(&self, tx: &Connection, now: DateTime<Utc>, report: &mut ImportReport) -> Result<UserId> {
        if let Some(id) = tx
            .query_row("SELECT id FROM users WHERE username = ?1", [IMPORT_USER], |r| r.get::<_, String>(0))
            .optional()?
        {
            return Ok(UserId(id));
        }
        let language = self
            .settings
            .language_pairs()
            .into_iter()
            .next()
            .map(|p| p.code)
            .ok_or_else(|| Error::Invalid("no languages configured".into()))?;
        let user = UserProfile {
            id: UserId::generate(),
            username: IMPORT_USER.into(),
            selected_language: language,
            gender: None,
            age: None,
            locality: None,
            roles: Default::default(),
        };
        insert_user(tx, &user, "!", None, now)?;
        report.users_created += 1;
        Ok(user.id)
    }

    fn signer_for(&self, tx: &Connection, entry: &ManifestEntry, now: DateTime<Utc>, report: &mut ImportReport) -> Result<UserId> {
        if let Some(id) = tx
            .query_row("SELECT id FROM users WHERE pseudonym = ?1", params![entry.signer], |r| r.get::<_, String>(0))
            .optional()?
        {
            return Ok(UserId(id));
        }
        let d = &entry.demographics;
        let user = UserProfile {
            id: UserId::generate(),
            username: entry.signer.clone(),
            selected_language: entry.language.clone(),
            gender: d.gender,
            age: d.age_band.as_deref().and_then(age_band_floor),
            locality: d.locality.clone(),
            roles: Default::default(),
        };
        insert_user(tx, &user, "!", Some(&entry.signer), now)?;
        report.users_created += 1;
        Ok(user.id)
    }
}
