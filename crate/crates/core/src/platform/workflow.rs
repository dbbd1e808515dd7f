use std::collections::BTreeSet;

use rusqlite::{params, Connection};
use serde::{Deserialize, Serialize};
use signcorpus_store::{ObjectKey, ObjectKind, KEYPOINT_EXT};

use super::{idempotent, replayed, Platform};
use crate::annotation::{validate_track, AnnotationTrack, Segment, TrackKind};
use crate::domain::{
    container_for_key, validate_trim, CameraView, ContentType, Lighting, Prompt, PromptId, Recording, RecordingId,
    Role, TrimWindow, UserId, UserProfile, VideoMetaInput,
};
use crate::error::{Error, Result};
use crate::keypoints::{check_alignment, parse_sidecar};
use crate::lifecycle::{transition, LifecycleEvent, LifecycleState};
use crate::repo::{self, now_str};
use crate::srt::render_srt;
use crate::text::split_sentences;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackInput {
    pub kind: TrackKind,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationInput {
    pub tracks: Vec<TrackInput>,
    #[serde(default)]
    pub script: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewRecording {
    pub prompt_id: PromptId,
    pub key: ObjectKey,
    #[serde(default)]
    pub meta: VideoMetaInput,
    pub trim: TrimWindow,
    /// Optional annotation made by the signer right after recording.
    #[serde(default)]
    pub annotation: Option<AnnotationInput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoVerdict {
    Correct,
    Incorrect,
}

/// Validator edits applied to the recording before the verdict.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corrections {
    pub start_ms: Option<i64>,
    pub end_ms: Option<i64>,
    pub camera_view: Option<CameraView>,
    pub lighting: Option<Lighting>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoValidationInput {
    pub verdict: VideoVerdict,
    #[serde(default)]
    pub corrections: Option<Corrections>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationVerdict {
    Accepted,
    Corrected,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationValidationInput {
    pub verdict: AnnotationVerdict,
    #[serde(default)]
    pub tracks: Option<Vec<TrackInput>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateResponse {
    pub state: LifecycleState,
}

/// A recording with its prompt and active tracks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordingView {
    pub recording: Recording,
    pub prompt: Prompt,
    pub tracks: Vec<AnnotationTrack>,
}

/// Which stage an operation acts on, for choosing between E_STALE and
/// E_WRONG_STATE.
#[derive(Debug, Clone, Copy)]
enum Stage {
    Video,
    Annotation,
    AnnotationValidation,
}

fn check_stage(stage: Stage, actual: LifecycleState) -> Result<()> {
    use LifecycleState::*;
    let expected = match stage {
        Stage::Video => PendingVideoValidation,
        Stage::Annotation => PendingAnnotation,
        Stage::AnnotationValidation => PendingAnnotationValidation,
    };
    if actual == expected {
        return Ok(());
    }
    let decided = match stage {
        Stage::Video => true,
        Stage::Annotation => matches!(actual, PendingAnnotationValidation | AnnotationValidated),
        Stage::AnnotationValidation => actual == AnnotationValidated,
    };
    if decided {
        Err(Error::Stale(actual))
    } else {
        Err(Error::WrongState { expected, actual })
    }
}

/// Applies `event` to `rec`, stores it with a compare-and-set on its version,
/// and appends the audit event.
fn apply(tx: &Connection, mut rec: Recording, event: LifecycleEvent, actor: &UserId, platform: &Platform) -> Result<Recording> {
    let from = rec.state;
    rec.state = transition(from, event)?;
    let expected_version = rec.version;
    let stored = repo::update_recording(tx, &rec, expected_version)?;
    repo::insert_event(tx, &rec.id, event, Some(from), stored.state, actor, platform.now())?;
    Ok(stored)
}

fn to_tracks(inputs: &[TrackInput], rid: &RecordingId, annotator: &UserId) -> Result<Vec<AnnotationTrack>> {
    if inputs.is_empty() {
        return Err(Error::NoTracks);
    }
    let kinds: BTreeSet<TrackKind> = inputs.iter().map(|t| t.kind).collect();
    if kinds.len() != inputs.len() {
        return Err(Error::Invalid("at most one track per kind".into()));
    }
    Ok(inputs
        .iter()
        .map(|t| AnnotationTrack {
            kind: t.kind,
            segments: t.segments.clone(),
            recording_id: rid.clone(),
            annotator_id: annotator.clone(),
        })
        .collect())
}

impl Platform {
    fn validate_tracks(&self, tracks: &[AnnotationTrack], trim: TrimWindow, reference: &str, prompt: &Prompt) -> Result<()> {
        for track in tracks {
            validate_track(track, trim, reference, &prompt.language, self.settings.track_rules()).map_err(Error::Track)?;
        }
        Ok(())
    }

    /// Checks the script rules and returns the reference text tracks must match.
    fn reference_text<'a>(&self, prompt: &'a Prompt, script: Option<&'a str>) -> Result<&'a str> {
        match prompt.content_type {
            ContentType::Text => match script {
                Some(_) => Err(Error::Invalid("text prompts take no script".into())),
                None => Ok(&prompt.content),
            },
            ContentType::Topic => {
                let script = script.filter(|s| !s.trim().is_empty()).ok_or(Error::MissingScript)?;
                let got = split_sentences(script, &prompt.language).len();
                let need = self.settings.topic_sentence_count;
                if got < need {
                    return Err(Error::ScriptTooShort { need, got });
                }
                Ok(script)
            }
        }
    }

    pub async fn submit_recording(&self, user: &UserProfile, new: NewRecording, idem: Option<&str>) -> Result<Recording> {
        const OP: &str = "submit_recording";
        if let Some(done) = self.repo.tx(|tx| replayed(tx, &user.id, OP, idem))? {
            return Ok(done);
        }
        user.require(Role::Contributor)?;
        let prompt = self
            .repo
            .tx(|tx| repo::get_prompt(tx, &new.prompt_id))?
            .ok_or_else(|| Error::NoPrompt(new.prompt_id.to_string()))?;
        if prompt.language != user.selected_language {
            return Err(Error::LangMismatch {
                prompt: prompt.language.to_string(),
                user: user.selected_language.to_string(),
            });
        }
        if new.key.kind() != ObjectKind::Video {
            return Err(Error::Invalid(format!("{} is not a video key", new.key)));
        }
        let meta = new.meta.complete(container_for_key(&new.key))?;
        let trim = validate_trim(new.trim, meta.duration_ms)?;
        if !self.store.exists(&new.key).await? {
            return Err(Error::NoBlob(new.key.to_string()));
        }

        let rid = RecordingId::generate();
        let draft = match &new.annotation {
            None => None,
            Some(input) => {
                let tracks = to_tracks(&input.tracks, &rid, &user.id)?;
                let reference = self.reference_text(&prompt, input.script.as_deref())?;
                self.validate_tracks(&tracks, trim, reference, &prompt)?;
                Some(serde_json::to_string(input)?)
            }
        };

        self.repo.tx(|tx| {
            idempotent(tx, &user.id, OP, idem, || {
                let rec = Recording {
                    id: rid.clone(),
                    prompt_id: prompt.id.clone(),
                    signer_id: user.id.clone(),
                    video_key: new.key.clone(),
                    meta,
                    trim,
                    state: LifecycleState::INITIAL,
                    script: None,
                    keypoints_key: None,
                    version: 0,
                    created_at: self.now(),
                };
                repo::insert_recording(tx, &rec, draft.as_deref())?;
                repo::insert_event(tx, &rec.id, LifecycleEvent::VideoSubmitted, None, rec.state, &user.id, self.now())?;
                repo::require_recording(tx, &rec.id)
            })
        })
    }

    pub fn submit_video_validation(
        &self,
        user: &UserProfile,
        rid: &RecordingId,
        input: VideoValidationInput,
        idem: Option<&str>,
    ) -> Result<StateResponse> {
        self.repo.tx(|tx| {
            idempotent(tx, &user.id, "submit_video_validation", idem, || {
                user.require(Role::Validator)?;
                let mut rec = repo::require_recording(tx, rid)?;
                if rec.signer_id == user.id {
                    return Err(Error::SelfValidation);
                }
                check_stage(Stage::Video, rec.state)?;
                if let Some(c) = input.corrections {
                    let trim = TrimWindow::new(c.start_ms.unwrap_or(rec.trim.start_ms), c.end_ms.unwrap_or(rec.trim.end_ms));
                    rec.trim = validate_trim(trim, rec.meta.duration_ms)?;
                    rec.meta.camera_view = c.camera_view.unwrap_or(rec.meta.camera_view);
                    rec.meta.lighting = c.lighting.unwrap_or(rec.meta.lighting);
                }

                let round = repo::video_round(tx, rid)?;
                let already: bool = tx.query_row(
                    "SELECT EXISTS(SELECT 1 FROM video_validations WHERE recording_id = ?1 AND validator_id = ?2 AND round = ?3)",
                    params![rid.as_str(), user.id.as_str(), round],
                    |r| r.get(0),
                )?;
                if already {
                    return Err(Error::DuplicateVerdict);
                }
                let verdict = serde_json::to_value(input.verdict)?;
                tx.execute(
                    "INSERT INTO video_validations (recording_id, validator_id, round, verdict, corrections, submitted_at) \
                     VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
                    params![
                        rid.as_str(),
                        user.id.as_str(),
                        round,
                        verdict.as_str(),
                        input.corrections.map(|c| serde_json::to_string(&c)).transpose()?,
                        now_str(self.now())
                    ],
                )?;

                // Majority of `quorum` verdicts decides; until then the vote is only recorded.
                let (correct, total): (u32, u32) = tx.query_row(
                    "SELECT COALESCE(SUM(verdict = 'correct'), 0), COUNT(*) FROM video_validations \
                     WHERE recording_id = ?1 AND round = ?2",
                    params![rid.as_str(), round],
                    |r| Ok((r.get(0)?, r.get(1)?)),
                )?;
                if total < self.settings.quorum {
                    return Ok(StateResponse { state: rec.state });
                }
                let event = if correct * 2 > total {
                    LifecycleEvent::VideoVerdictCorrect
                } else {
                    LifecycleEvent::VideoVerdictIncorrect
                };
                let mut rec = apply(tx, rec, event, &user.id, self)?;
                if rec.state == LifecycleState::PendingAnnotation {
                    rec = self.apply_signer_draft(tx, rec)?;
                }
                Ok(StateResponse { state: rec.state })
            })
        })
    }

    /// Submits the signer's own annotation, if one came with the recording
    /// and still fits the (possibly corrected) trim.
    fn apply_signer_draft(&self, tx: &Connection, rec: Recording) -> Result<Recording> {
        let Some(draft) = repo::draft_annotation(tx, &rec.id)? else {
            return Ok(rec);
        };
        let input: AnnotationInput = serde_json::from_str(&draft)?;
        let prompt = repo::get_prompt(tx, &rec.prompt_id)?.ok_or_else(|| Error::NoPrompt(rec.prompt_id.to_string()))?;
        let tracks = to_tracks(&input.tracks, &rec.id, &rec.signer_id)?;
        let valid = self
            .reference_text(&prompt, input.script.as_deref())
            .and_then(|reference| self.validate_tracks(&tracks, rec.trim, reference, &prompt));
        if let Err(e) = valid {
            tracing::info!(recording = %rec.id, error = %e, "signer annotation no longer valid after corrections; dropped");
            return Ok(rec);
        }
        self.store_annotation(tx, rec.clone(), &tracks, input.script, &rec.signer_id)
    }

    fn store_annotation(
        &self,
        tx: &Connection,
        mut rec: Recording,
        tracks: &[AnnotationTrack],
        script: Option<String>,
        annotator: &UserId,
    ) -> Result<Recording> {
        for track in tracks {
            repo::insert_track(tx, track, self.now())?;
        }
        rec.script = script;
        apply(tx, rec, LifecycleEvent::AnnotationSubmitted, annotator, self)
    }

    pub fn submit_annotation(
        &self,
        user: &UserProfile,
        rid: &RecordingId,
        input: AnnotationInput,
        idem: Option<&str>,
    ) -> Result<StateResponse> {
        self.repo.tx(|tx| {
            idempotent(tx, &user.id, "submit_annotation", idem, || {
                user.require(Role::Annotator)?;
                let rec = repo::require_recording(tx, rid)?;
                check_stage(Stage::Annotation, rec.state)?;
                let prompt = repo::get_prompt(tx, &rec.prompt_id)?.ok_or_else(|| Error::NoPrompt(rec.prompt_id.to_string()))?;
                let reference = self.reference_text(&prompt, input.script.as_deref())?;
                let tracks = to_tracks(&input.tracks, rid, &user.id)?;
                self.validate_tracks(&tracks, rec.trim, reference, &prompt)?;
                let rec = self.store_annotation(tx, rec, &tracks, input.script.clone(), &user.id)?;
                Ok(StateResponse { state: rec.state })
            })
        })
    }

    pub fn submit_annotation_validation(
        &self,
        user: &UserProfile,
        rid: &RecordingId,
        input: AnnotationValidationInput,
        idem: Option<&str>,
    ) -> Result<StateResponse> {
        self.repo.tx(|tx| {
            idempotent(tx, &user.id, "submit_annotation_validation", idem, || {
                user.require(Role::Validator)?;
                let rec = repo::require_recording(tx, rid)?;
                let current = repo::active_tracks(tx, rid)?;
                if rec.signer_id == user.id || current.iter().any(|t| t.annotator_id == user.id) {
                    return Err(Error::SelfValidation);
                }
                check_stage(Stage::AnnotationValidation, rec.state)?;
                let event = match (input.verdict, &input.tracks) {
                    (AnnotationVerdict::Accepted, None) => LifecycleEvent::AnnotationVerdictAccepted,
                    (AnnotationVerdict::Accepted, Some(_)) => {
                        return Err(Error::Invalid("an accepted annotation takes no tracks".into()))
                    }
                    (AnnotationVerdict::Corrected, None) => return Err(Error::NoTracks),
                    (AnnotationVerdict::Corrected, Some(inputs)) => {
                        let prompt =
                            repo::get_prompt(tx, &rec.prompt_id)?.ok_or_else(|| Error::NoPrompt(rec.prompt_id.to_string()))?;
                        let reference = match prompt.content_type {
                            ContentType::Text => prompt.content.as_str(),
                            ContentType::Topic => rec.script.as_deref().ok_or(Error::MissingScript)?,
                        };
                        let tracks = to_tracks(inputs, rid, &user.id)?;
                        self.validate_tracks(&tracks, rec.trim, reference, &prompt)?;
                        repo::deactivate_tracks(tx, rid)?;
                        for track in &tracks {
                            repo::insert_track(tx, track, self.now())?;
                        }
                        LifecycleEvent::AnnotationVerdictCorrected
                    }
                };
                tx.execute(
                    "INSERT INTO annotation_validations (recording_id, validator_id, verdict, submitted_at) VALUES (?1, ?2, ?3, ?4)",
                    params![
                        rid.as_str(),
                        user.id.as_str(),
                        serde_json::to_value(input.verdict)?.as_str(),
                        now_str(self.now())
                    ],
                )?;
                let rec = apply(tx, rec, event, &user.id, self)?;
                Ok(StateResponse { state: rec.state })
            })
        })
    }

    /// Returns a rejected recording to the validation queue with a fresh
    /// round of verdicts.
    pub fn requeue(&self, admin: &UserProfile, rid: &RecordingId, idem: Option<&str>) -> Result<StateResponse> {
        admin.require(Role::Admin)?;
        self.repo.tx(|tx| {
            idempotent(tx, &admin.id, "requeue", idem, || {
                let rec = repo::require_recording(tx, rid)?;
                if rec.state != LifecycleState::VideoRejected {
                    return Err(Error::WrongState {
                        expected: LifecycleState::VideoRejected,
                        actual: rec.state,
                    });
                }
                repo::bump_video_round(tx, rid)?;
                let rec = apply(tx, rec, LifecycleEvent::Requeue, &admin.id, self)?;
                Ok(StateResponse { state: rec.state })
            })
        })
    }

    /// Checks a keypoint sidecar against the trimmed duration, stores it and
    /// links it to the recording.
    pub async fn attach_keypoints(&self, rid: &RecordingId, sidecar: bytes::Bytes) -> Result<ObjectKey> {
        let rec = self.recording(rid)?;
        let parsed = parse_sidecar(&sidecar)?;
        check_alignment(parsed.frame_count(), rec.trim, rec.meta.fps)?;
        let key = self.store.put_object(sidecar, KEYPOINT_EXT).await?;
        self.repo.tx(|tx| {
            let rec = repo::require_recording(tx, rid)?;
            tx.execute(
                "UPDATE recordings SET keypoints_key = ?1, version = version + 1 WHERE id = ?2",
                params![key.to_string(), rec.id.as_str()],
            )?;
            Ok(())
        })?;
        Ok(key)
    }

    pub fn recording(&self, rid: &RecordingId) -> Result<Recording> {
        self.repo.tx(|tx| repo::require_recording(tx, rid))
    }

    pub fn recording_view(&self, rid: &RecordingId) -> Result<RecordingView> {
        self.repo.tx(|tx| {
            let recording = repo::require_recording(tx, rid)?;
            let prompt = repo::get_prompt(tx, &recording.prompt_id)?
                .ok_or_else(|| Error::NoPrompt(recording.prompt_id.to_string()))?;
            let tracks = repo::active_tracks(tx, rid)?;
            Ok(RecordingView { recording, prompt, tracks })
        })
    }

    /// Every track ever stored for the recording, superseded ones included.
    pub fn track_history(&self, rid: &RecordingId) -> Result<Vec<AnnotationTrack>> {
        self.repo.tx(|tx| repo::all_tracks(tx, rid))
    }

    pub fn events(&self, rid: &RecordingId) -> Result<Vec<repo::EventRecord>> {
        self.repo.tx(|tx| repo::events_for(tx, rid))
    }

    /// The active track of `kind` rendered as SubRip relative to the trim.
    pub fn subtitles_srt(&self, rid: &RecordingId, kind: TrackKind) -> Result<String> {
        let (rec, tracks) = self.repo.tx(|tx| Ok((repo::require_recording(tx, rid)?, repo::active_tracks(tx, rid)?)))?;
        let track = tracks
            .iter()
            .find(|t| t.kind == kind)
            .ok_or_else(|| Error::NotFound(format!("{} track for recording {rid}", kind.as_str())))?;
        render_srt(track, rec.trim)
    }
}
