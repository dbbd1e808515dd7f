//! The recording lifecycle state machine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LifecycleState {
    PendingVideoValidation,
    VideoRejected,
    PendingAnnotation,
    PendingAnnotationValidation,
    AnnotationValidated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LifecycleEvent {
    VideoSubmitted,
    VideoVerdictCorrect,
    VideoVerdictIncorrect,
    AnnotationSubmitted,
    AnnotationVerdictAccepted,
    AnnotationVerdictCorrected,
    Requeue,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 5] = [
        LifecycleState::PendingVideoValidation,
        LifecycleState::VideoRejected,
        LifecycleState::PendingAnnotation,
        LifecycleState::PendingAnnotationValidation,
        LifecycleState::AnnotationValidated,
    ];

    /// State a recording enters on `VideoSubmitted`.
    pub const INITIAL: LifecycleState = LifecycleState::PendingVideoValidation;

    pub fn as_str(self) -> &'static str {
        match self {
            LifecycleState::PendingVideoValidation => "PendingVideoValidation",
            LifecycleState::VideoRejected => "VideoRejected",
            LifecycleState::PendingAnnotation => "PendingAnnotation",
            LifecycleState::PendingAnnotationValidation => "PendingAnnotationValidation",
            LifecycleState::AnnotationValidated => "AnnotationValidated",
        }
    }
}

impl LifecycleEvent {
    pub const ALL: [LifecycleEvent; 7] = [
        LifecycleEvent::VideoSubmitted,
        LifecycleEvent::VideoVerdictCorrect,
        LifecycleEvent::VideoVerdictIncorrect,
        LifecycleEvent::AnnotationSubmitted,
        LifecycleEvent::AnnotationVerdictAccepted,
        LifecycleEvent::AnnotationVerdictCorrected,
        LifecycleEvent::Requeue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LifecycleEvent::VideoSubmitted => "VideoSubmitted",
            LifecycleEvent::VideoVerdictCorrect => "VideoVerdictCorrect",
            LifecycleEvent::VideoVerdictIncorrect => "VideoVerdictIncorrect",
            LifecycleEvent::AnnotationSubmitted => "AnnotationSubmitted",
            LifecycleEvent::AnnotationVerdictAccepted => "AnnotationVerdictAccepted",
            LifecycleEvent::AnnotationVerdictCorrected => "AnnotationVerdictCorrected",
            LifecycleEvent::Requeue => "Requeue",
        }
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for LifecycleEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LifecycleState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LifecycleState::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown state {s:?}")))
    }
}

impl FromStr for LifecycleEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LifecycleEvent::ALL
            .into_iter()
            .find(|ev| ev.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown event {s:?}")))
    }
}

/// Successor of `state` under `event`, or `E_ILLEGAL_TRANSITION`.
///
/// `VideoSubmitted` creates a recording in [`LifecycleState::INITIAL`] and is
/// not a transition out of any existing state.
pub fn transition(state: LifecycleState, event: LifecycleEvent) -> Result<LifecycleState> {
    use LifecycleEvent as E;
    use LifecycleState as S;
    match (state, event) {
        (S::PendingVideoValidation, E::VideoVerdictCorrect) => Ok(S::PendingAnnotation),
        (S::PendingVideoValidation, E::VideoVerdictIncorrect) => Ok(S::VideoRejected),
        (S::PendingAnnotation, E::AnnotationSubmitted) => Ok(S::PendingAnnotationValidation),
        (S::PendingAnnotationValidation, E::AnnotationVerdictAccepted | E::AnnotationVerdictCorrected) => {
            Ok(S::AnnotationValidated)
        }
        (S::VideoRejected, E::Requeue) => Ok(S::PendingVideoValidation),
        (state, event) => Err(Error::IllegalTransition { state, event }),
    }
}

/// Replays an event log from creation. The first event must be
/// `VideoSubmitted`; returns the final state.
pub fn replay(events: &[LifecycleEvent]) -> Result<LifecycleState> {
    let (first, rest) = events
        .split_first()
        .ok_or_else(|| Error::Invalid("empty event log".into()))?;
    if *first != LifecycleEvent::VideoSubmitted {
        return Err(Error::Invalid(format!("log starts with {first}")));
    }
    rest.iter()
        .try_fold(LifecycleState::INITIAL, |state, ev| transition(state, *ev))
}
