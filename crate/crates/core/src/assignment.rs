//! Which work item a user is offered next.
//!
//! Tasks are leases, not locks: the same item may be offered to several
//! users at once and the workflow engine decides which submission wins.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationTrack;
use crate::domain::{Prompt, PromptId, Recording, RecordingId, Role, UserId, UserProfile};
use crate::error::Error;
use crate::lifecycle::LifecycleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Record,
    ValidateVideo,
    Annotate,
    ValidateAnnotation,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Record,
        TaskKind::ValidateVideo,
        TaskKind::Annotate,
        TaskKind::ValidateAnnotation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Record => "record",
            TaskKind::ValidateVideo => "validate-video",
            TaskKind::Annotate => "annotate",
            TaskKind::ValidateAnnotation => "validate-annotation",
        }
    }

    pub fn required_role(self) -> Role {
        match self {
            TaskKind::Record => Role::Contributor,
            TaskKind::ValidateVideo | TaskKind::ValidateAnnotation => Role::Validator,
            TaskKind::Annotate => Role::Annotator,
        }
    }

    /// Lifecycle state of the recordings this kind draws from.
    pub fn pool_state(self) -> Option<LifecycleState> {
        match self {
            TaskKind::Record => None,
            TaskKind::ValidateVideo => Some(LifecycleState::PendingVideoValidation),
            TaskKind::Annotate => Some(LifecycleState::PendingAnnotation),
            TaskKind::ValidateAnnotation => Some(LifecycleState::PendingAnnotationValidation),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::NotFound(format!("task kind {s:?}")))
    }
}

/// A recording offered for validation or annotation, with its context.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingItem {
    pub recording: Recording,
    pub prompt: Prompt,
    /// Authors of the currently active tracks.
    pub annotators: Vec<UserId>,
}

#[derive(Debug, Clone, Copy)]
pub enum Candidate<'a> {
    Prompt(&'a Prompt),
    Recording(&'a RecordingItem),
}

/// What a user has already done, per task kind.
#[derive(Debug, Clone, Default)]
pub struct UserHistory {
    pub recorded_prompts: HashSet<PromptId>,
    pub video_validated: HashSet<RecordingId>,
    pub annotated: HashSet<RecordingId>,
    pub annotation_validated: HashSet<RecordingId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Uniformly random over the eligible pool.
    #[default]
    Uniform,
    /// Record tasks prefer prompts with the fewest recordings; ties are random.
    CoverageWeighted,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssignmentPolicy {
    pub allow_repeat_recordings: bool,
    pub selection: SelectionPolicy,
}

/// True iff `candidate` belongs in the pool `next_task` draws from for
/// `(user, kind)`.
pub fn is_eligible(
    user: &UserProfile,
    candidate: Candidate<'_>,
    kind: TaskKind,
    history: &UserHistory,
    policy: &AssignmentPolicy,
) -> bool {
    match (kind, candidate) {
        (TaskKind::Record, Candidate::Prompt(p)) => {
            p.language == user.selected_language
                && (policy.allow_repeat_recordings || !history.recorded_prompts.contains(&p.id))
        }
        (TaskKind::Record, Candidate::Recording(_)) => false,
        (_, Candidate::Prompt(_)) => false,
        (kind, Candidate::Recording(item)) => {
            let rec = &item.recording;
            if Some(rec.state) != kind.pool_state() || item.prompt.language != user.selected_language {
                return false;
            }
            let own_recording = rec.signer_id == user.id;
            let own_annotation = item.annotators.contains(&user.id);
            match kind {
                TaskKind::ValidateVideo => !own_recording && !history.video_validated.contains(&rec.id),
                TaskKind::Annotate => !history.annotated.contains(&rec.id),
                TaskKind::ValidateAnnotation => {
                    !own_recording && !own_annotation && !history.annotation_validated.contains(&rec.id)
                }
                TaskKind::Record => unreachable!(),
            }
        }
    }
}

/// Picks one element uniformly at random.
pub fn choose_uniform<'a, T, R: Rng + ?Sized>(pool: &'a [T], rng: &mut R) -> Option<&'a T> {
    pool.choose(rng)
}

/// Picks uniformly among the elements with the lowest weight.
pub fn choose_least<'a, T, R: Rng + ?Sized>(
    pool: &'a [T],
    weight: impl Fn(&T) -> usize,
    rng: &mut R,
) -> Option<&'a T> {
    let min = pool.iter().map(&weight).min()?;
    let lightest: Vec<&T> = pool.iter().filter(|t| weight(t) == min).collect();
    lightest.choose(rng).copied()
}

/// Draws a record task from `prompts`, honouring eligibility and policy.
pub fn select_prompt<'a, R: Rng + ?Sized>(
    user: &UserProfile,
    prompts: &'a [Prompt],
    history: &UserHistory,
    policy: &AssignmentPolicy,
    coverage: &PromptCoverage,
    rng: &mut R,
) -> Option<&'a Prompt> {
    let pool: Vec<&Prompt> = prompts
        .iter()
        .filter(|p| is_eligible(user, Candidate::Prompt(p), TaskKind::Record, history, policy))
        .collect();
    match policy.selection {
        SelectionPolicy::Uniform => choose_uniform(&pool, rng).copied(),
        SelectionPolicy::CoverageWeighted => {
            choose_least(&pool, |p| coverage.get(&p.id).copied().unwrap_or(0), rng).copied()
        }
    }
}

/// Draws a validation or annotation task from `items`.
pub fn select_recording<'a, R: Rng + ?Sized>(
    user: &UserProfile,
    items: &'a [RecordingItem],
    kind: TaskKind,
    history: &UserHistory,
    policy: &AssignmentPolicy,
    rng: &mut R,
) -> Option<&'a RecordingItem> {
    let pool: Vec<&RecordingItem> = items
        .iter()
        .filter(|item| is_eligible(user, Candidate::Recording(item), kind, history, policy))
        .collect();
    choose_uniform(&pool, rng).copied()
}

/// Work handed to a user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Task {
    pub kind: TaskKind,
    pub prompt: Prompt,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recording: Option<Recording>,
    /// Tracks under review, for annotation validation.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tracks: Vec<AnnotationTrack>,
    pub issued_at: DateTime<Utc>,
    pub lease_ttl_s: u64,
}

impl Task {
    pub fn record(prompt: Prompt, issued_at: DateTime<Utc>, lease_ttl_s: u64) -> Self {
        Task {
            kind: TaskKind::Record,
            prompt,
            recording: None,
            tracks: Vec::new(),
            issued_at,
            lease_ttl_s,
        }
    }

    pub fn for_recording(
        kind: TaskKind,
        item: RecordingItem,
        tracks: Vec<AnnotationTrack>,
        issued_at: DateTime<Utc>,
        lease_ttl_s: u64,
    ) -> Self {
        debug_assert_ne!(kind, TaskKind::Record);
        Task {
            kind,
            prompt: item.prompt,
            recording: Some(item.recording),
            tracks,
            issued_at,
            lease_ttl_s,
        }
    }
}

/// Recording counts per prompt, used by the coverage-weighted policy.
pub type PromptCoverage = HashMap<PromptId, usize>;
