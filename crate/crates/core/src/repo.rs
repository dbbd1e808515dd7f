//! SQLite persistence shared by the server and the admin CLI.
//!
//! One connection guarded by a mutex: every closure passed to [`Repo::tx`]
//! runs as a single serializable transaction, which is what gives the
//! workflow its per-recording compare-and-set.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use rusqlite::types::Type;
use rusqlite::{params, Connection, OptionalExtension, Row, Transaction};

use crate::annotation::{AnnotationTrack, Segment, TrackKind};
use crate::assignment::UserHistory;
use crate::domain::{
    ContentType, Gender, LanguageCode, Prompt, PromptId, Recording, RecordingId, Role, TrimWindow, UserId,
    UserProfile,
};
use crate::error::{Error, Result};
use crate::lifecycle::{LifecycleEvent, LifecycleState};

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS users (
    id TEXT PRIMARY KEY,
    username TEXT NOT NULL UNIQUE,
    password_hash TEXT NOT NULL,
    selected_language TEXT NOT NULL,
    gender TEXT,
    age INTEGER,
    locality TEXT,
    roles TEXT NOT NULL,
    pseudonym TEXT,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    token_hash TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(id),
    expires_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS prompts (
    id TEXT PRIMARY KEY,
    content TEXT NOT NULL,
    content_type TEXT NOT NULL,
    language TEXT NOT NULL,
    dedupe_key TEXT NOT NULL UNIQUE,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS recordings (
    id TEXT PRIMARY KEY,
    prompt_id TEXT NOT NULL REFERENCES prompts(id),
    signer_id TEXT NOT NULL REFERENCES users(id),
    video_key TEXT NOT NULL,
    meta TEXT NOT NULL,
    trim_start INTEGER NOT NULL,
    trim_end INTEGER NOT NULL,
    state TEXT NOT NULL,
    version INTEGER NOT NULL,
    video_round INTEGER NOT NULL DEFAULT 0,
    script TEXT,
    draft_annotation TEXT,
    keypoints_key TEXT,
    created_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS recordings_state ON recordings(state);
CREATE TABLE IF NOT EXISTS events (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    recording_id TEXT NOT NULL REFERENCES recordings(id),
    event TEXT NOT NULL,
    from_state TEXT,
    to_state TEXT NOT NULL,
    actor_id TEXT NOT NULL,
    at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS events_recording ON events(recording_id, seq);
CREATE TABLE IF NOT EXISTS video_validations (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    recording_id TEXT NOT NULL REFERENCES recordings(id),
    validator_id TEXT NOT NULL,
    round INTEGER NOT NULL,
    verdict TEXT NOT NULL,
    corrections TEXT,
    submitted_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tracks (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    recording_id TEXT NOT NULL REFERENCES recordings(id),
    kind TEXT NOT NULL,
    annotator_id TEXT NOT NULL,
    segments TEXT NOT NULL,
    active INTEGER NOT NULL,
    created_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS tracks_recording ON tracks(recording_id, active);
CREATE TABLE IF NOT EXISTS annotation_validations (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    recording_id TEXT NOT NULL REFERENCES recordings(id),
    validator_id TEXT NOT NULL,
    verdict TEXT NOT NULL,
    submitted_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS idempotency (
    scope TEXT NOT NULL,
    key TEXT NOT NULL,
    response TEXT NOT NULL,
    PRIMARY KEY (scope, key)
);
"#;

/// Tables reported by [`Repo::row_counts`].
pub const TABLES: [&str; 9] = [
    "users",
    "sessions",
    "prompts",
    "recordings",
    "events",
    "video_validations",
    "tracks",
    "annotation_validations",
    "idempotency",
];

pub struct Repo {
    conn: Mutex<Connection>,
}

impl Repo {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let conn = Connection::open(path)?;
        conn.busy_timeout(Duration::from_secs(10))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    pub fn in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.pragma_update(None, "foreign_keys", true)?;
        conn.execute_batch(SCHEMA)?;
        Ok(Repo {
            conn: Mutex::new(conn),
        })
    }

    /// Runs `f` in a transaction, committing only if it returns `Ok`.
    pub fn tx<T>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.conn.lock();
        let tx = conn.transaction_with_behavior(rusqlite::TransactionBehavior::Immediate)?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    pub fn row_counts(&self) -> Result<BTreeMap<&'static str, i64>> {
        let conn = self.conn.lock();
        TABLES
            .iter()
            .map(|t| {
                let n: i64 = conn.query_row(&format!("SELECT COUNT(*) FROM {t}"), [], |r| r.get(0))?;
                Ok((*t, n))
            })
            .collect()
    }
}

pub(crate) fn now_str(now: DateTime<Utc>) -> String {
    now.to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

fn conversion<E: std::error::Error + Send + Sync + 'static>(idx: usize, err: E) -> rusqlite::Error {
    rusqlite::Error::FromSqlConversionFailure(idx, Type::Text, Box::new(err))
}

fn parse_col<T: FromStr>(row: &Row<'_>, idx: usize) -> rusqlite::Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let s: String = row.get(idx)?;
    s.parse().map_err(|e| conversion(idx, e))
}

fn json_col<T: serde::de::DeserializeOwned>(row: &Row<'_>, idx: usize) -> rusqlite::Result<T> {
    let s: String = row.get(idx)?;
    serde_json::from_str(&s).map_err(|e| conversion(idx, e))
}

fn time_col(row: &Row<'_>, idx: usize) -> rusqlite::Result<DateTime<Utc>> {
    let s: String = row.get(idx)?;
    DateTime::parse_from_rfc3339(&s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| conversion(idx, e))
}

#[derive(Debug, thiserror::Error)]
#[error("unexpected value {0:?}")]
struct BadValue(String);

// ---- users ---------------------------------------------------------------

pub(crate) const USER_COLS: &str = "id, username, selected_language, gender, age, locality, roles";

pub(crate) fn user_from_row(row: &Row<'_>) -> rusqlite::Result<UserProfile> {
    let gender: Option<String> = row.get(3)?;
    let roles: String = row.get(6)?;
    Ok(UserProfile {
        id: UserId(row.get(0)?),
        username: row.get(1)?,
        selected_language: parse_col(row, 2)?,
        gender: gender
            .map(|g| Gender::parse(&g).ok_or_else(|| conversion(3, BadValue(g))))
            .transpose()?,
        age: row.get(4)?,
        locality: row.get(5)?,
        roles: roles
            .split(',')
            .filter(|r| !r.is_empty())
            .map(|r| Role::parse(r).ok_or_else(|| conversion(6, BadValue(r.into()))))
            .collect::<rusqlite::Result<BTreeSet<_>>>()?,
    })
}

pub(crate) fn roles_str(roles: &BTreeSet<Role>) -> String {
    roles.iter().map(|r| r.as_str()).collect::<Vec<_>>().join(",")
}

pub(crate) fn get_user(conn: &Connection, id: &UserId) -> Result<Option<UserProfile>> {
    Ok(conn
        .query_row(
            &format!("SELECT {USER_COLS} FROM users WHERE id = ?1"),
            [id.as_str()],
            user_from_row,
        )
        .optional()?)
}

pub(crate) fn require_user(conn: &Connection, id: &UserId) -> Result<UserProfile> {
    get_user(conn, id)?.ok_or_else(|| Error::NotFound(format!("user {id}")))
}

// ---- prompts -------------------------------------------------------------

const PROMPT_COLS: &str = "id, content, content_type, language";

fn prompt_from_row(row: &Row<'_>) -> rusqlite::Result<Prompt> {
    let ct: String = row.get(2)?;
    Ok(Prompt {
        id: PromptId(row.get(0)?),
        content: row.get(1)?,
        content_type: ContentType::parse(&ct).ok_or_else(|| conversion(2, BadValue(ct)))?,
        language: parse_col::<LanguageCode>(row, 3)?,
    })
}

pub(crate) fn get_prompt(conn: &Connection, id: &PromptId) -> Result<Option<Prompt>> {
    Ok(conn
        .query_row(
            &format!("SELECT {PROMPT_COLS} FROM prompts WHERE id = ?1"),
            [id.as_str()],
            prompt_from_row,
        )
        .optional()?)
}

pub(crate) fn prompt_by_dedupe_key(conn: &Connection, key: &str) -> Result<Option<Prompt>> {
    Ok(conn
        .query_row(
            &format!("SELECT {PROMPT_COLS} FROM prompts WHERE dedupe_key = ?1"),
            [key],
            prompt_from_row,
        )
        .optional()?)
}

pub(crate) fn list_prompts(conn: &Connection) -> Result<Vec<Prompt>> {
    let mut stmt = conn.prepare(&format!("SELECT {PROMPT_COLS} FROM prompts ORDER BY id"))?;
    let rows = stmt.query_map([], prompt_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn insert_prompt(conn: &Connection, prompt: &Prompt, dedupe_key: &str, now: DateTime<Utc>) -> Result<()> {
    conn.execute(
        "INSERT INTO prompts (id, content, content_type, language, dedupe_key, created_at) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        params![
            prompt.id.as_str(),
            prompt.content,
            prompt.content_type.as_str(),
            prompt.language.as_str(),
            dedupe_key,
            now_str(now)
        ],
    )?;
    Ok(())
}

// ---- recordings ----------------------------------------------------------

const RECORDING_COLS: &str =
    "id, prompt_id, signer_id, video_key, meta, trim_start, trim_end, state, script, keypoints_key, version, created_at";

fn recording_from_row(row: &Row<'_>) -> rusqlite::Result<Recording> {
    let keypoints: Option<String> = row.get(9)?;
    let version: i64 = row.get(10)?;
    Ok(Recording {
        id: RecordingId(row.get(0)?),
        prompt_id: PromptId(row.get(1)?),
        signer_id: UserId(row.get(2)?),
        video_key: parse_col(row, 3)?,
        meta: json_col(row, 4)?,
        trim: TrimWindow::new(row.get(5)?, row.get(6)?),
        state: parse_col(row, 7)?,
        script: row.get(8)?,
        keypoints_key: keypoints
            .map(|k| k.parse().map_err(|e| conversion(9, e)))
            .transpose()?,
        version: version as u64,
        created_at: time_col(row, 11)?,
    })
}

pub(crate) fn get_recording(conn: &Connection, id: &RecordingId) -> Result<Option<Recording>> {
    Ok(conn
        .query_row(
            &format!("SELECT {RECORDING_COLS} FROM recordings WHERE id = ?1"),
            [id.as_str()],
            recording_from_row,
        )
        .optional()?)
}

pub(crate) fn require_recording(conn: &Connection, id: &RecordingId) -> Result<Recording> {
    get_recording(conn, id)?.ok_or_else(|| Error::NotFound(format!("recording {id}")))
}

pub(crate) fn recordings_in_state(conn: &Connection, state: LifecycleState) -> Result<Vec<Recording>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {RECORDING_COLS} FROM recordings WHERE state = ?1 ORDER BY id"
    ))?;
    let rows = stmt.query_map([state.as_str()], recording_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn all_recordings(conn: &Connection) -> Result<Vec<Recording>> {
    let mut stmt = conn.prepare(&format!("SELECT {RECORDING_COLS} FROM recordings ORDER BY id"))?;
    let rows = stmt.query_map([], recording_from_row)?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn insert_recording(conn: &Connection, rec: &Recording, draft: Option<&str>) -> Result<()> {
    conn.execute(
        "INSERT INTO recordings (id, prompt_id, signer_id, video_key, meta, trim_start, trim_end, state, version, \
         script, draft_annotation, keypoints_key, created_at) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13)",
        params![
            rec.id.as_str(),
            rec.prompt_id.as_str(),
            rec.signer_id.as_str(),
            rec.video_key.to_string(),
            serde_json::to_string(&rec.meta)?,
            rec.trim.start_ms,
            rec.trim.end_ms,
            rec.state.as_str(),
            rec.version as i64,
            rec.script,
            draft,
            rec.keypoints_key.as_ref().map(ToString::to_string),
            now_str(rec.created_at),
        ],
    )?;
    Ok(())
}

/// Compare-and-set on `(state, version)`. Returns the stored recording with
/// its new version.
pub(crate) fn update_recording(conn: &Connection, rec: &Recording, expected_version: u64) -> Result<Recording> {
    let changed = conn.execute(
        "UPDATE recordings SET meta = ?1, trim_start = ?2, trim_end = ?3, state = ?4, script = ?5, keypoints_key = ?6, \
         version = version + 1 WHERE id = ?7 AND version = ?8",
        params![
            serde_json::to_string(&rec.meta)?,
            rec.trim.start_ms,
            rec.trim.end_ms,
            rec.state.as_str(),
            rec.script,
            rec.keypoints_key.as_ref().map(ToString::to_string),
            rec.id.as_str(),
            expected_version as i64,
        ],
    )?;
    if changed != 1 {
        let current = require_recording(conn, &rec.id)?;
        return Err(Error::Stale(current.state));
    }
    require_recording(conn, &rec.id)
}

pub(crate) fn video_round(conn: &Connection, id: &RecordingId) -> Result<i64> {
    Ok(conn.query_row("SELECT video_round FROM recordings WHERE id = ?1", [id.as_str()], |r| r.get(0))?)
}

pub(crate) fn bump_video_round(conn: &Connection, id: &RecordingId) -> Result<()> {
    conn.execute("UPDATE recordings SET video_round = video_round + 1 WHERE id = ?1", [id.as_str()])?;
    Ok(())
}

pub(crate) fn draft_annotation(conn: &Connection, id: &RecordingId) -> Result<Option<String>> {
    let draft: Option<String> = conn.query_row(
        "SELECT draft_annotation FROM recordings WHERE id = ?1",
        [id.as_str()],
        |r| r.get(0),
    )?;
    Ok(draft)
}

// ---- events --------------------------------------------------------------

pub(crate) fn insert_event(
    conn: &Connection,
    id: &RecordingId,
    event: LifecycleEvent,
    from: Option<LifecycleState>,
    to: LifecycleState,
    actor: &UserId,
    now: DateTime<Utc>,
) -> Result<()> {
    conn.execute(
        "INSERT INTO events (recording_id, event, from_state, to_state, actor_id, at) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        params![
            id.as_str(),
            event.as_str(),
            from.map(LifecycleState::as_str),
            to.as_str(),
            actor.as_str(),
            now_str(now)
        ],
    )?;
    Ok(())
}

/// One audit-log row.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct EventRecord {
    pub event: LifecycleEvent,
    pub from_state: Option<LifecycleState>,
    pub to_state: LifecycleState,
    pub actor_id: UserId,
}

pub(crate) fn events_for(conn: &Connection, id: &RecordingId) -> Result<Vec<EventRecord>> {
    let mut stmt = conn.prepare(
        "SELECT event, from_state, to_state, actor_id FROM events WHERE recording_id = ?1 ORDER BY seq",
    )?;
    let rows = stmt.query_map([id.as_str()], |row| {
        let from: Option<String> = row.get(1)?;
        Ok(EventRecord {
            event: parse_col(row, 0)?,
            from_state: from.map(|s| s.parse().map_err(|e| conversion(1, e))).transpose()?,
            to_state: parse_col(row, 2)?,
            actor_id: UserId(row.get(3)?),
        })
    })?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

// ---- tracks --------------------------------------------------------------

pub(crate) fn active_tracks(conn: &Connection, id: &RecordingId) -> Result<Vec<AnnotationTrack>> {
    tracks_where(conn, id, "AND active = 1")
}

pub(crate) fn all_tracks(conn: &Connection, id: &RecordingId) -> Result<Vec<AnnotationTrack>> {
    tracks_where(conn, id, "")
}

fn tracks_where(conn: &Connection, id: &RecordingId, filter: &str) -> Result<Vec<AnnotationTrack>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT kind, annotator_id, segments FROM tracks WHERE recording_id = ?1 {filter} ORDER BY kind, id"
    ))?;
    let rows = stmt.query_map([id.as_str()], |row| {
        let kind: String = row.get(0)?;
        Ok(AnnotationTrack {
            kind: TrackKind::parse(&kind).ok_or_else(|| conversion(0, BadValue(kind)))?,
            annotator_id: UserId(row.get(1)?),
            segments: json_col::<Vec<Segment>>(row, 2)?,
            recording_id: id.clone(),
        })
    })?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}

pub(crate) fn insert_track(conn: &Connection, track: &AnnotationTrack, now: DateTime<Utc>) -> Result<()> {
    conn.execute(
        "INSERT INTO tracks (recording_id, kind, annotator_id, segments, active, created_at) VALUES (?1, ?2, ?3, ?4, 1, ?5)",
        params![
            track.recording_id.as_str(),
            track.kind.as_str(),
            track.annotator_id.as_str(),
            serde_json::to_string(&track.segments)?,
            now_str(now)
        ],
    )?;
    Ok(())
}

pub(crate) fn deactivate_tracks(conn: &Connection, id: &RecordingId) -> Result<()> {
    conn.execute("UPDATE tracks SET active = 0 WHERE recording_id = ?1", [id.as_str()])?;
    Ok(())
}

// ---- idempotency ---------------------------------------------------------

/// The JSON result stored for `(scope, key)`, if any.
pub(crate) fn idem_get(conn: &Connection, scope: &str, key: &str) -> Result<Option<String>> {
    Ok(conn
        .query_row(
            "SELECT response FROM idempotency WHERE scope = ?1 AND key = ?2",
            [scope, key],
            |r| r.get(0),
        )
        .optional()?)
}

pub(crate) fn idem_put(conn: &Connection, scope: &str, key: &str, response: &str) -> Result<()> {
    conn.execute(
        "INSERT INTO idempotency (scope, key, response) VALUES (?1, ?2, ?3)",
        params![scope, key, response],
    )?;
    Ok(())
}

// ---- history -------------------------------------------------------------

fn id_set<T: From<String> + Ord + std::hash::Hash + Eq>(
    conn: &Connection,
    sql: &str,
    user: &UserId,
) -> Result<std::collections::HashSet<T>> {
    let mut stmt = conn.prepare(sql)?;
    let rows = stmt.query_map([user.as_str()], |r| r.get::<_, String>(0))?;
    Ok(rows.map(|r| r.map(T::from)).collect::<rusqlite::Result<_>>()?)
}

impl From<String> for PromptId {
    fn from(s: String) -> Self {
        PromptId(s)
    }
}

impl From<String> for RecordingId {
    fn from(s: String) -> Self {
        RecordingId(s)
    }
}

pub(crate) fn user_history(conn: &Connection, user: &UserId) -> Result<UserHistory> {
    Ok(UserHistory {
        recorded_prompts: id_set(conn, "SELECT DISTINCT prompt_id FROM recordings WHERE signer_id = ?1", user)?,
        video_validated: id_set(
            conn,
            "SELECT DISTINCT v.recording_id FROM video_validations v JOIN recordings r ON r.id = v.recording_id \
             WHERE v.validator_id = ?1 AND v.round = r.video_round",
            user,
        )?,
        annotated: id_set(conn, "SELECT DISTINCT recording_id FROM tracks WHERE annotator_id = ?1", user)?,
        annotation_validated: id_set(
            conn,
            "SELECT DISTINCT recording_id FROM annotation_validations WHERE validator_id = ?1",
            user,
        )?,
    })
}

pub(crate) fn recording_counts_by_prompt(conn: &Connection) -> Result<std::collections::HashMap<PromptId, usize>> {
    let mut stmt = conn.prepare("SELECT prompt_id, COUNT(*) FROM recordings GROUP BY prompt_id")?;
    let rows = stmt.query_map([], |r| Ok((PromptId(r.get(0)?), r.get::<_, i64>(1)? as usize)))?;
    Ok(rows.collect::<rusqlite::Result<_>>()?)
}
