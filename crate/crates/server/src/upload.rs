//! Streams a multipart video field into the object store without holding
//! the whole body in memory.

use std::io;

use axum::extract::multipart::Field;
use axum::extract::Multipart;
use bytes::Bytes;
use futures::stream::{self, StreamExt};
use signcorpus_store::{ObjectKey, ObjectStore};
use std::sync::Arc;
use tokio::sync::mpsc;

use crate::error::{ApiError, ApiResult};

/// Accepted media types and the extension their objects are stored under.
pub const MEDIA_TYPES: [(&str, &str); 2] = [("video/webm", ".webm"), ("video/mp4", ".mp4")];

enum Chunk {
    Data(Bytes),
    Done,
    Failed(String),
}

pub fn ext_for(media_type: &str) -> Option<&'static str> {
    let base = media_type.split(';').next()?.trim();
    MEDIA_TYPES
        .iter()
        .find(|(t, _)| t.eq_ignore_ascii_case(base))
        .map(|(_, ext)| *ext)
}

/// Reads the first file field of `multipart` into the store.
pub async fn receive(store: Arc<dyn ObjectStore>, mut multipart: Multipart) -> ApiResult<ObjectKey> {
    loop {
        let field = multipart
            .next_field()
            .await
            .map_err(|e| ApiError::BadRequest(e.body_text()))?
            .ok_or_else(|| ApiError::BadRequest("multipart body has no file field".into()))?;
        if field.file_name().is_none() && field.name() != Some("video") {
            continue;
        }
        let media_type = field.content_type().unwrap_or("application/octet-stream").to_string();
        let ext = ext_for(&media_type)
            .ok_or_else(|| ApiError::BadMediaType(format!("{media_type} is not video/webm or video/mp4")))?;
        return pipe(store, field, ext).await;
    }
}

async fn pipe(store: Arc<dyn ObjectStore>, mut field: Field<'_>, ext: &'static str) -> ApiResult<ObjectKey> {
    let (tx, rx) = mpsc::channel::<Chunk>(4);
    // A sender dropped before `Done` means the request went away mid-body.
    let body = stream::unfold(Some(rx), |rx| async move {
        let mut rx = rx?;
        match rx.recv().await {
            Some(Chunk::Data(b)) => Some((Ok(b), Some(rx))),
            Some(Chunk::Done) => None,
            Some(Chunk::Failed(m)) => Some((Err(io::Error::other(m)), None)),
            None => Some((Err(io::Error::other("request ended before the upload completed")), None)),
        }
    })
    .boxed();
    let put = tokio::spawn(async move { store.put_stream(body, ext).await });

    loop {
        let msg = match field.chunk().await {
            Ok(Some(b)) => Chunk::Data(b),
            Ok(None) => Chunk::Done,
            Err(e) => Chunk::Failed(e.body_text()),
        };
        let last = !matches!(msg, Chunk::Data(_));
        // The store stops reading early when the object is over the cap.
        if tx.send(msg).await.is_err() || last {
            break;
        }
    }
    drop(tx);
    let key = put.await.map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(key)
}
