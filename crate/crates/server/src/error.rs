use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use signcorpus_core::annotation::TrackError;
use signcorpus_core::Error;

/// Error body: `{"code": "E_...", "message": "...", "errors": [...]}`.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<TrackError>,
}

#[derive(Debug)]
pub enum ApiError {
    Core(Error),
    BadMediaType(String),
    BadRequest(String),
    Internal(String),
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        ApiError::Core(err)
    }
}

impl From<signcorpus_store::StoreError> for ApiError {
    fn from(err: signcorpus_store::StoreError) -> Self {
        ApiError::Core(err.into())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(err: JsonRejection) -> Self {
        ApiError::Core(Error::Invalid(err.body_text()))
    }
}

impl From<QueryRejection> for ApiError {
    fn from(err: QueryRejection) -> Self {
        ApiError::Core(Error::Invalid(err.body_text()))
    }
}

impl From<PathRejection> for ApiError {
    fn from(err: PathRejection) -> Self {
        ApiError::BadRequest(err.body_text())
    }
}

/// HTTP status for a platform error code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "E_UNAUTHENTICATED" => StatusCode::UNAUTHORIZED,
        "E_ROLE" | "E_SELF_VALIDATION" => StatusCode::FORBIDDEN,
        "E_NO_PROMPT" | "E_NOT_FOUND" => StatusCode::NOT_FOUND,
        "E_WRONG_STATE" | "E_STALE" | "E_DUPLICATE_VERDICT" | "E_CONFLICT" | "E_ILLEGAL_TRANSITION" => {
            StatusCode::CONFLICT
        }
        "E_TOO_LARGE" => StatusCode::PAYLOAD_TOO_LARGE,
        "E_BAD_MEDIA_TYPE" => StatusCode::UNSUPPORTED_MEDIA_TYPE,
        "E_BACKEND" => StatusCode::SERVICE_UNAVAILABLE,
        "E_ABORTED" | "E_BAD_REQUEST" => StatusCode::BAD_REQUEST,
        "E_STORE" | "E_IO" | "E_INTERNAL" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Core(e) => e.code(),
            ApiError::BadMediaType(_) => "E_BAD_MEDIA_TYPE",
            ApiError::BadRequest(_) => "E_BAD_REQUEST",
            ApiError::Internal(_) => "E_INTERNAL",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.code();
        let status = status_for(code);
        let (message, errors) = match self {
            ApiError::Core(Error::Track(errors)) => ("annotation track rejected".to_string(), errors),
            ApiError::Core(e) => (e.to_string(), Vec::new()),
            ApiError::BadMediaType(m) | ApiError::BadRequest(m) | ApiError::Internal(m) => (m, Vec::new()),
        };
        if status.is_server_error() {
            tracing::error!(code, %message, "request failed");
        }
        let body = ErrorBody {
            code: code.to_string(),
            message,
            errors,
        };
        (status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
