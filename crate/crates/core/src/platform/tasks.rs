use rand::rngs::StdRng;
use rand::SeedableRng;
use rusqlite::Connection;

use super::Platform;
use crate::assignment::{
    is_eligible, select_prompt, select_recording, Candidate, RecordingItem, Task, TaskKind, UserHistory,
};
use crate::domain::{Prompt, UserProfile};
use crate::error::{Error, Result};
use crate::repo;

/// Every item of a task kind, before per-user filtering.
#[derive(Debug, Clone)]
pub enum Pool {
    Prompts(Vec<Prompt>),
    Recordings(Vec<RecordingItem>),
}

impl Pool {
    pub fn len(&self) -> usize {
        match self {
            Pool::Prompts(p) => p.len(),
            Pool::Recordings(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn load_pool(tx: &Connection, kind: TaskKind) -> Result<Pool> {
    let Some(state) = kind.pool_state() else {
        return Ok(Pool::Prompts(repo::list_prompts(tx)?));
    };
    let mut items = Vec::new();
    for recording in repo::recordings_in_state(tx, state)? {
        let prompt = repo::get_prompt(tx, &recording.prompt_id)?
            .ok_or_else(|| Error::NoPrompt(recording.prompt_id.to_string()))?;
        let annotators = repo::active_tracks(tx, &recording.id)?
            .into_iter()
            .map(|t| t.annotator_id)
            .collect();
        items.push(RecordingItem {
            recording,
            prompt,
            annotators,
        });
    }
    Ok(Pool::Recordings(items))
}

impl Platform {
    /// All items of `kind` and the user's history, read in one transaction.
    pub fn candidates(&self, user: &UserProfile, kind: TaskKind) -> Result<(Pool, UserHistory)> {
        self.repo
            .tx(|tx| Ok((load_pool(tx, kind)?, repo::user_history(tx, &user.id)?)))
    }

    /// The subset of [`Platform::candidates`] `next_task` draws from.
    pub fn eligible_pool(&self, user: &UserProfile, kind: TaskKind) -> Result<Pool> {
        let (pool, history) = self.candidates(user, kind)?;
        let policy = self.settings.assignment_policy();
        Ok(match pool {
            Pool::Prompts(p) => Pool::Prompts(
                p.into_iter()
                    .filter(|p| is_eligible(user, Candidate::Prompt(p), kind, &history, &policy))
                    .collect(),
            ),
            Pool::Recordings(r) => Pool::Recordings(
                r.into_iter()
                    .filter(|i| is_eligible(user, Candidate::Recording(i), kind, &history, &policy))
                    .collect(),
            ),
        })
    }

    /// Offers the user one random eligible item, or `None` when the pool is
    /// empty. A seed makes the draw reproducible.
    pub fn next_task(&self, user: &UserProfile, kind: TaskKind, seed: Option<u64>) -> Result<Option<Task>> {
        user.require(kind.required_role())?;
        let mut rng = match seed {
            Some(seed) => StdRng::seed_from_u64(seed),
            None => StdRng::from_os_rng(),
        };
        self.draw(user, kind, &mut rng)
    }

    /// [`Platform::next_task`] with a caller-owned generator, for repeated draws.
    pub fn draw(&self, user: &UserProfile, kind: TaskKind, rng: &mut StdRng) -> Result<Option<Task>> {
        user.require(kind.required_role())?;
        let policy = self.settings.assignment_policy();
        let ttl = self.settings.lease_ttl_s;
        let now = self.now();
        self.repo.tx(|tx| {
            let history = repo::user_history(tx, &user.id)?;
            match load_pool(tx, kind)? {
                Pool::Prompts(prompts) => {
                    let coverage = repo::recording_counts_by_prompt(tx)?;
                    Ok(select_prompt(user, &prompts, &history, &policy, &coverage, rng)
                        .map(|p| Task::record(p.clone(), now, ttl)))
                }
                Pool::Recordings(items) => {
                    let Some(item) = select_recording(user, &items, kind, &history, &policy, rng) else {
                        return Ok(None);
                    };
                    let tracks = match kind {
                        TaskKind::ValidateAnnotation | TaskKind::Annotate => {
                            repo::active_tracks(tx, &item.recording.id)?
                        }
                        _ => Vec::new(),
                    };
                    Ok(Some(Task::for_recording(kind, item.clone(), tracks, now, ttl)))
                }
            }
        })
    }
}
