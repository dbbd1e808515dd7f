use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Multipart, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bytes::Bytes;
use serde::{Deserialize, Serialize};
use signcorpus_core::annotation::TrackKind;
use signcorpus_core::assignment::TaskKind;
use signcorpus_core::domain::{LanguageCode, RecordingId, Role};
use signcorpus_core::platform::{
    AnnotationInput, AnnotationValidationInput, ExportFilter, NewRecording, NewUser, ProfileUpdate,
    VideoValidationInput,
};
use signcorpus_core::{Error, Platform};
use signcorpus_store::ObjectKey;

use crate::auth::{Bearer, CurrentUser, IdemKey};
use crate::error::{ApiError, ApiResult};
use crate::{blocking, upload, AppState};

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct JsonBody<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
struct Query<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
struct Path<T>(T);

pub fn api(platform: &Platform) -> Router<AppState> {
    let settings = platform.settings();
    let csv_limit = DefaultBodyLimit::max(settings.max_csv_bytes as usize + 1);
    let sidecar_limit = DefaultBodyLimit::max(settings.max_upload_bytes as usize + 1);
    Router::new()
        .route("/languages", get(languages))
        .route("/users", post(register))
        .route("/users/me", get(me).patch(update_me))
        .route("/sessions", post(login).delete(logout))
        .route("/prompts", get(list_prompts).post(ingest).layer(csv_limit))
        .route("/tasks/{kind}", get(next_task))
        .route("/videos", post(upload_video).layer(DefaultBodyLimit::disable()))
        .route("/recordings", post(create_recording))
        .route("/recordings/{id}", get(get_recording))
        .route("/recordings/{id}/events", get(events))
        .route("/recordings/{id}/validation", post(validate_video))
        .route("/recordings/{id}/annotation", post(annotate))
        .route("/recordings/{id}/annotation-validation", post(validate_annotation))
        .route("/recordings/{id}/subtitles.srt", get(subtitles))
        .route("/recordings/{id}/keypoints", post(keypoints).layer(sidecar_limit))
        .route("/recordings/{id}/requeue", post(requeue))
        .route("/stats", get(stats))
}

fn body_error(err: BytesRejection) -> ApiError {
    if err.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::Core(Error::TooLarge(err.body_text()))
    } else {
        ApiError::BadRequest(err.body_text())
    }
}

async fn languages(State(p): State<AppState>) -> impl IntoResponse {
    Json(p.settings().language_pairs())
}

async fn register(State(p): State<AppState>, JsonBody(new): JsonBody<NewUser>) -> ApiResult<Response> {
    let user = blocking(move || p.register(new, Role::crowd_defaults())).await?;
    Ok((StatusCode::CREATED, Json(user)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Credentials {
    username: String,
    password: String,
}

async fn login(State(p): State<AppState>, JsonBody(c): JsonBody<Credentials>) -> ApiResult<Response> {
    let session = blocking(move || p.login(&c.username, &c.password)).await?;
    Ok((StatusCode::CREATED, Json(session)).into_response())
}

async fn logout(State(p): State<AppState>, Bearer(token): Bearer) -> ApiResult<StatusCode> {
    blocking(move || p.logout(&token)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn me(CurrentUser(user): CurrentUser) -> impl IntoResponse {
    Json(user)
}

async fn update_me(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    JsonBody(update): JsonBody<ProfileUpdate>,
) -> ApiResult<Response> {
    let user = blocking(move || p.update_profile(&user.id, update)).await?;
    Ok(Json(user).into_response())
}

async fn list_prompts(State(p): State<AppState>, CurrentUser(_): CurrentUser) -> ApiResult<Response> {
    Ok(Json(blocking(move || p.prompts()).await?).into_response())
}

async fn ingest(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    IdemKey(idem): IdemKey,
    headers: HeaderMap,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    user.require(Role::Admin)?;
    let media_type = headers.get(CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    let base = media_type.split(';').next().unwrap_or("").trim();
    if !base.eq_ignore_ascii_case("text/csv") {
        return Err(ApiError::BadMediaType(format!("prompt files are text/csv, got {media_type:?}")));
    }
    let body = body.map_err(body_error)?;
    let report = blocking(move || p.ingest_csv_keyed(&user.id, &body, idem.as_deref())).await?;
    Ok(Json(report).into_response())
}

#[derive(Deserialize)]
struct TaskQuery {
    seed: Option<u64>,
}

async fn next_task(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    Path(kind): Path<String>,
    Query(q): Query<TaskQuery>,
) -> ApiResult<Response> {
    let kind: TaskKind = kind.parse()?;
    match blocking(move || p.next_task(&user, kind, q.seed)).await? {
        Some(task) => Ok(Json(task).into_response()),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

#[derive(Serialize)]
struct KeyResponse {
    key: ObjectKey,
}

async fn upload_video(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    multipart: Multipart,
) -> ApiResult<Response> {
    user.require(Role::Contributor)?;
    let key = upload::receive(p.store().clone(), multipart).await?;
    Ok((StatusCode::CREATED, Json(KeyResponse { key })).into_response())
}

async fn create_recording(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    IdemKey(idem): IdemKey,
    JsonBody(new): JsonBody<NewRecording>,
) -> ApiResult<Response> {
    let rec = p.submit_recording(&user, new, idem.as_deref()).await?;
    Ok((StatusCode::CREATED, Json(rec)).into_response())
}

async fn get_recording(
    State(p): State<AppState>,
    CurrentUser(_): CurrentUser,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let view = blocking(move || p.recording_view(&RecordingId::from(id))).await?;
    Ok(Json(view).into_response())
}

async fn events(State(p): State<AppState>, CurrentUser(_): CurrentUser, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(move || p.events(&RecordingId::from(id))).await?).into_response())
}

async fn validate_video(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    IdemKey(idem): IdemKey,
    Path(id): Path<String>,
    JsonBody(input): JsonBody<VideoValidationInput>,
) -> ApiResult<Response> {
    let out = blocking(move || p.submit_video_validation(&user, &RecordingId::from(id), input, idem.as_deref())).await?;
    Ok(Json(out).into_response())
}

async fn annotate(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    IdemKey(idem): IdemKey,
    Path(id): Path<String>,
    JsonBody(input): JsonBody<AnnotationInput>,
) -> ApiResult<Response> {
    let out = blocking(move || p.submit_annotation(&user, &RecordingId::from(id), input, idem.as_deref())).await?;
    Ok(Json(out).into_response())
}

async fn validate_annotation(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    IdemKey(idem): IdemKey,
    Path(id): Path<String>,
    JsonBody(input): JsonBody<AnnotationValidationInput>,
) -> ApiResult<Response> {
    let out = blocking(move || {
        p.submit_annotation_validation(&user, &RecordingId::from(id), input, idem.as_deref())
    })
    .await?;
    Ok(Json(out).into_response())
}

#[derive(Deserialize)]
struct SubtitleQuery {
    kind: Option<String>,
}

async fn subtitles(
    State(p): State<AppState>,
    CurrentUser(_): CurrentUser,
    Path(id): Path<String>,
    Query(q): Query<SubtitleQuery>,
) -> ApiResult<Response> {
    let kind = match q.kind.as_deref() {
        None => TrackKind::Sentence,
        Some(k) => TrackKind::parse(k).ok_or_else(|| Error::Invalid(format!("unknown track kind {k:?}")))?,
    };
    let body = blocking(move || p.subtitles_srt(&RecordingId::from(id), kind)).await?;
    Ok(([(CONTENT_TYPE, "application/x-subrip; charset=utf-8")], body).into_response())
}

async fn keypoints(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    user.require(Role::Admin)?;
    let body = body.map_err(body_error)?;
    let key = p.attach_keypoints(&RecordingId::from(id), body).await?;
    Ok(Json(KeyResponse { key }).into_response())
}

async fn requeue(
    State(p): State<AppState>,
    CurrentUser(user): CurrentUser,
    IdemKey(idem): IdemKey,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let out = blocking(move || p.requeue(&user, &RecordingId::from(id), idem.as_deref())).await?;
    Ok(Json(out).into_response())
}

#[derive(Deserialize)]
struct StatsQuery {
    language: Option<LanguageCode>,
}

async fn stats(
    State(p): State<AppState>,
    CurrentUser(_): CurrentUser,
    Query(q): Query<StatsQuery>,
) -> ApiResult<Response> {
    let filter = ExportFilter {
        language: q.language,
        ..Default::default()
    };
    Ok(Json(blocking(move || p.corpus_stats(&filter)).await?).into_response())
}
