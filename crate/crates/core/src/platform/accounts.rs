use std::collections::BTreeSet;

use argon2::password_hash::{rand_core::OsRng, PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use chrono::{DateTime, Duration, Utc};
use rand::RngCore;
use rusqlite::{params, OptionalExtension};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use super::Platform;
use crate::domain::{check_age, Gender, LanguageCode, Role, UserId, UserProfile};
use crate::error::{Error, Result};
use crate::repo::{self, now_str, USER_COLS};

pub const MIN_PASSWORD_LEN: usize = 8;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewUser {
    pub username: String,
    pub password: String,
    pub selected_language: LanguageCode,
    #[serde(default)]
    pub gender: Option<Gender>,
    #[serde(default)]
    pub age: Option<u8>,
    #[serde(default)]
    pub locality: Option<String>,
}

/// Fields left `None` are unchanged.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileUpdate {
    pub selected_language: Option<LanguageCode>,
    pub gender: Option<Gender>,
    pub age: Option<u8>,
    pub locality: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub user_id: UserId,
    pub expires_at: DateTime<Utc>,
}

fn token_hash(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

impl Platform {
    fn check_language(&self, code: &LanguageCode) -> Result<()> {
        if self.settings.is_configured(code) {
            Ok(())
        } else {
            Err(Error::UnknownLanguage(code.to_string()))
        }
    }

    pub fn register(&self, new: NewUser, roles: BTreeSet<Role>) -> Result<UserProfile> {
        let username = new.username.trim().to_string();
        if username.is_empty() || username.len() > 64 {
            return Err(Error::Invalid("username must be 1 to 64 characters".into()));
        }
        if new.password.chars().count() < MIN_PASSWORD_LEN {
            return Err(Error::Invalid(format!(
                "password must be at least {MIN_PASSWORD_LEN} characters"
            )));
        }
        self.check_language(&new.selected_language)?;
        check_age(new.age)?;
        let salt = SaltString::generate(&mut OsRng);
        let hash = Argon2::default()
            .hash_password(new.password.as_bytes(), &salt)
            .map_err(|e| Error::Invalid(e.to_string()))?
            .to_string();
        let profile = UserProfile {
            id: UserId::generate(),
            username,
            selected_language: new.selected_language,
            gender: new.gender,
            age: new.age,
            locality: new.locality.filter(|l| !l.trim().is_empty()),
            roles,
        };
        self.repo.tx(|tx| {
            let taken: bool = tx.query_row(
                "SELECT EXISTS(SELECT 1 FROM users WHERE username = ?1)",
                [&profile.username],
                |r| r.get(0),
            )?;
            if taken {
                return Err(Error::Conflict(format!("username {:?} is taken", profile.username)));
            }
            insert_user(tx, &profile, &hash, None, self.now())
        })?;
        Ok(profile)
    }

    pub fn login(&self, username: &str, password: &str) -> Result<Session> {
        self.login_at(username, password, self.now())
    }

    /// [`Platform::login`] with an explicit clock reading.
    pub fn login_at(&self, username: &str, password: &str, now: DateTime<Utc>) -> Result<Session> {
        let found: Option<(String, String)> = self.repo.tx(|tx| {
            Ok(tx
                .query_row(
                    "SELECT id, password_hash FROM users WHERE username = ?1",
                    [username.trim()],
                    |r| Ok((r.get(0)?, r.get(1)?)),
                )
                .optional()?)
        })?;
        let Some((user_id, stored)) = found else {
            return Err(Error::Unauthenticated);
        };
        let parsed = PasswordHash::new(&stored).map_err(|_| Error::Unauthenticated)?;
        Argon2::default()
            .verify_password(password.as_bytes(), &parsed)
            .map_err(|_| Error::Unauthenticated)?;

        let mut raw = [0u8; 32];
        rand::rng().fill_bytes(&mut raw);
        let token = hex::encode(raw);
        let expires_at = now + Duration::hours(self.settings.session_ttl_hours as i64);
        self.repo.tx(|tx| {
            tx.execute(
                "INSERT INTO sessions (token_hash, user_id, expires_at) VALUES (?1, ?2, ?3)",
                params![token_hash(&token), user_id, now_str(expires_at)],
            )?;
            Ok(())
        })?;
        Ok(Session {
            token,
            user_id: UserId(user_id),
            expires_at,
        })
    }

    pub fn authenticate(&self, token: &str) -> Result<UserProfile> {
        self.authenticate_at(token, self.now())
    }

    /// Resolves a bearer token. Only the token's SHA-256 is stored, so the
    /// lookup never compares secret material; the final check is constant time.
    pub fn authenticate_at(&self, token: &str, now: DateTime<Utc>) -> Result<UserProfile> {
        let hash = token_hash(token);
        let found: Option<(String, String, String)> = self.repo.tx(|tx| {
            Ok(tx
                .query_row(
                    "SELECT token_hash, user_id, expires_at FROM sessions WHERE token_hash = ?1",
                    [&hash],
                    |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?)),
                )
                .optional()?)
        })?;
        let Some((stored, user_id, expires_at)) = found else {
            return Err(Error::Unauthenticated);
        };
        if !bool::from(stored.as_bytes().ct_eq(hash.as_bytes())) {
            return Err(Error::Unauthenticated);
        }
        let expires_at = DateTime::parse_from_rfc3339(&expires_at).map_err(|_| Error::Unauthenticated)?;
        if expires_at <= now {
            return Err(Error::Unauthenticated);
        }
        self.user(&UserId(user_id))?.ok_or(Error::Unauthenticated)
    }

    pub fn logout(&self, token: &str) -> Result<()> {
        self.repo.tx(|tx| {
            tx.execute("DELETE FROM sessions WHERE token_hash = ?1", [token_hash(token)])?;
            Ok(())
        })
    }

    pub fn user(&self, id: &UserId) -> Result<Option<UserProfile>> {
        self.repo.tx(|tx| repo::get_user(tx, id))
    }

    pub fn user_by_name(&self, username: &str) -> Result<Option<UserProfile>> {
        self.repo.tx(|tx| {
            Ok(tx
                .query_row(
                    &format!("SELECT {USER_COLS} FROM users WHERE username = ?1"),
                    [username],
                    repo::user_from_row,
                )
                .optional()?)
        })
    }

    pub fn update_profile(&self, id: &UserId, update: ProfileUpdate) -> Result<UserProfile> {
        if let Some(code) = &update.selected_language {
            self.check_language(code)?;
        }
        check_age(update.age)?;
        self.repo.tx(|tx| {
            let mut user = repo::require_user(tx, id)?;
            if let Some(code) = update.selected_language {
                user.selected_language = code;
            }
            if let Some(g) = update.gender {
                user.gender = Some(g);
            }
            if let Some(a) = update.age {
                user.age = Some(a);
            }
            if let Some(l) = update.locality {
                user.locality = Some(l).filter(|l| !l.trim().is_empty());
            }
            tx.execute(
                "UPDATE users SET selected_language = ?1, gender = ?2, age = ?3, locality = ?4 WHERE id = ?5",
                params![
                    user.selected_language.as_str(),
                    user.gender.map(Gender::as_str),
                    user.age,
                    user.locality,
                    user.id.as_str()
                ],
            )?;
            Ok(user)
        })
    }

    /// Adds roles to an existing account; used by the admin CLI.
    pub fn grant_roles(&self, username: &str, roles: &BTreeSet<Role>) -> Result<UserProfile> {
        let user = self
            .user_by_name(username)?
            .ok_or_else(|| Error::NotFound(format!("user {username:?}")))?;
        let all: BTreeSet<Role> = user.roles.union(roles).copied().collect();
        self.repo.tx(|tx| {
            tx.execute(
                "UPDATE users SET roles = ?1 WHERE id = ?2",
                params![repo::roles_str(&all), user.id.as_str()],
            )?;
            repo::require_user(tx, &user.id)
        })
    }
}

pub(crate) fn insert_user(
    tx: &rusqlite::Connection,
    profile: &UserProfile,
    password_hash: &str,
    pseudonym: Option<&str>,
    now: DateTime<Utc>,
) -> Result<()> {
    tx.execute(
        "INSERT INTO users (id, username, password_hash, selected_language, gender, age, locality, roles, pseudonym, created_at) \
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10)",
        params![
            profile.id.as_str(),
            profile.username,
            password_hash,
            profile.selected_language.as_str(),
            profile.gender.map(Gender::as_str),
            profile.age,
            profile.locality,
            repo::roles_str(&profile.roles),
            pseudonym,
            now_str(now)
        ],
    )?;
    Ok(())
}
