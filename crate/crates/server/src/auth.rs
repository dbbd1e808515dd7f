use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::HeaderMap;
use signcorpus_core::domain::UserProfile;
use signcorpus_core::Error;

use crate::error::ApiError;
use crate::{blocking, AppState};

pub const IDEMPOTENCY_KEY: &str = "idempotency-key";

/// The user behind the request's bearer token.
pub struct CurrentUser(pub UserProfile);

/// The raw bearer token, for logout.
pub struct Bearer(pub String);

fn bearer(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

impl FromRequestParts<AppState> for Bearer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &AppState) -> Result<Self, Self::Rejection> {
        bearer(&parts.headers)
            .map(|t| Bearer(t.to_string()))
            .ok_or(ApiError::Core(Error::Unauthenticated))
    }
}

impl FromRequestParts<AppState> for CurrentUser {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let Bearer(token) = Bearer::from_request_parts(parts, state).await?;
        let platform = state.clone();
        let user = blocking(move || platform.authenticate(&token)).await?;
        Ok(CurrentUser(user))
    }
}

/// Value of the `Idempotency-Key` header, if any.
pub struct IdemKey(pub Option<String>);

impl<S: Send + Sync> FromRequestParts<S> for IdemKey {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        match parts.headers.get(IDEMPOTENCY_KEY) {
            None => Ok(IdemKey(None)),
            Some(v) => {
                let key = v
                    .to_str()
                    .map_err(|_| ApiError::BadRequest("Idempotency-Key must be visible ASCII".into()))?;
                if key.is_empty() || key.len() > 255 {
                    return Err(ApiError::BadRequest("Idempotency-Key must be 1 to 255 characters".into()));
                }
                Ok(IdemKey(Some(key.to_string())))
            }
        }
    }
}
