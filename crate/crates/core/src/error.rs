use signcorpus_store::StoreError;

use crate::annotation::TrackError;
use crate::lifecycle::{LifecycleEvent, LifecycleState};

/// Every failure the platform reports. [`Error::code`] gives the stable
/// machine-readable code clients match on.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("event {event:?} is not allowed in state {state:?}")]
    IllegalTransition {
        state: LifecycleState,
        event: LifecycleEvent,
    },
    #[error("trim start {start_ms} must be before end {end_ms}")]
    TrimOrder { start_ms: i64, end_ms: i64 },
    #[error("trim [{start_ms}, {end_ms}] falls outside [0, {duration_ms}]")]
    TrimBounds {
        start_ms: i64,
        end_ms: i64,
        duration_ms: i64,
    },
    #[error("annotation track rejected: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Track(Vec<TrackError>),
    #[error("track cannot be rendered: {0}")]
    InvalidTrack(String),
    #[error("subtitle syntax error on line {line}: {detail}")]
    SrtSyntax { line: usize, detail: String },
    #[error("bad CSV header: {0}")]
    BadHeader(String),
    #[error("language {0:?} is not configured")]
    UnknownLanguage(String),
    #[error("no prompt {0}")]
    NoPrompt(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("prompt language {prompt} does not match the user's language {user}")]
    LangMismatch { prompt: String, user: String },
    #[error("required video metadata field {0:?} is missing")]
    MissingMeta(&'static str),
    #[error("video {0} has not been uploaded")]
    NoBlob(String),
    #[error("users cannot validate their own recordings or annotations")]
    SelfValidation,
    #[error("recording is {actual:?}, expected {expected:?}")]
    WrongState {
        expected: LifecycleState,
        actual: LifecycleState,
    },
    #[error("this stage was already decided (recording is now {0:?})")]
    Stale(LifecycleState),
    #[error("topic recordings need a script before annotation")]
    MissingScript,
    #[error("script has {got} sentences, at least {need} required")]
    ScriptTooShort { need: usize, got: usize },
    #[error("at least one annotation track is required")]
    NoTracks,
    #[error("user already submitted a verdict for this recording")]
    DuplicateVerdict,
    #[error("role {0} required")]
    Role(&'static str),
    #[error("missing, expired, or unknown session token")]
    Unauthenticated,
    #[error("keypoint sidecar has {actual} frames, expected {expected} (±1)")]
    FrameMismatch { expected: u64, actual: u64 },
    #[error("keypoint sidecar line {line}: {detail}")]
    SidecarSyntax { line: usize, detail: String },
    #[error("{0}")]
    Conflict(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("database error: {0}")]
    Db(#[from] rusqlite::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::IllegalTransition { .. } => "E_ILLEGAL_TRANSITION",
            Error::TrimOrder { .. } => "E_TRIM_ORDER",
            Error::TrimBounds { .. } => "E_TRIM_BOUNDS",
            Error::Track(errors) => errors.first().map_or("E_INVALID_TRACK", TrackError::code),
            Error::InvalidTrack(_) => "E_INVALID_TRACK",
            Error::SrtSyntax { .. } => "E_SRT_SYNTAX",
            Error::BadHeader(_) => "E_BAD_HEADER",
            Error::UnknownLanguage(_) => "E_UNKNOWN_LANGUAGE",
            Error::NoPrompt(_) => "E_NO_PROMPT",
            Error::NotFound(_) => "E_NOT_FOUND",
            Error::LangMismatch { .. } => "E_LANG_MISMATCH",
            Error::MissingMeta(_) => "E_MISSING_META",
            Error::NoBlob(_) => "E_NO_BLOB",
            Error::SelfValidation => "E_SELF_VALIDATION",
            Error::WrongState { .. } => "E_WRONG_STATE",
            Error::Stale(_) => "E_STALE",
            Error::MissingScript => "E_MISSING_SCRIPT",
            Error::ScriptTooShort { .. } => "E_SCRIPT_TOO_SHORT",
            Error::NoTracks => "E_NO_TRACKS",
            Error::DuplicateVerdict => "E_DUPLICATE_VERDICT",
            Error::Role(_) => "E_ROLE",
            Error::Unauthenticated => "E_UNAUTHENTICATED",
            Error::FrameMismatch { .. } => "E_FRAME_MISMATCH",
            Error::SidecarSyntax { .. } => "E_SIDECAR_SYNTAX",
            Error::Conflict(_) => "E_CONFLICT",
            Error::Invalid(_) => "E_INVALID",
            Error::TooLarge(_) => "E_TOO_LARGE",
            Error::Store(e) => e.code(),
            Error::Db(_) => "E_STORE",
            Error::Io(_) => "E_IO",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Invalid(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
