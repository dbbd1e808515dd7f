//! A small in-process S3-compatible server for tests.
//!
//! Implements path-style `PUT`, `GET` and `HEAD` on objects, requires a SigV4
//! `Authorization` header, and checks `x-amz-content-sha256` against the
//! received body. Failures can be injected to exercise retry paths.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::routing::get;
use axum::Router;
use parking_lot::Mutex;
use sha2::{Digest, Sha256};
use tokio::task::JoinHandle;

use crate::S3Config;

#[derive(Default)]
struct Inner {
    objects: Mutex<HashMap<(String, String), Bytes>>,
    fail_next: AtomicUsize,
    puts: AtomicUsize,
}

pub struct Emulator {
    addr: SocketAddr,
    inner: Arc<Inner>,
    task: JoinHandle<()>,
}

impl Emulator {
    pub async fn start() -> std::io::Result<Self> {
        let inner = Arc::new(Inner::default());
        let app = Router::new()
            .route("/{bucket}/{*key}", get(get_object).put(put_object))
            .with_state(inner.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(Emulator { addr, inner, task })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Client config pointing at this emulator.
    pub fn config(&self, bucket: &str, spool_dir: std::path::PathBuf) -> S3Config {
        S3Config {
            endpoint: self.endpoint(),
            bucket: bucket.to_string(),
            key_id: "EMULATOR".into(),
            secret: "emulator-secret".into(),
            region: "us-east-1".into(),
            spool_dir,
        }
    }

    pub fn object_count(&self) -> usize {
        self.inner.objects.lock().len()
    }

    /// Number of PUT requests that stored an object.
    pub fn put_count(&self) -> usize {
        self.inner.puts.load(Ordering::SeqCst)
    }

    /// Makes the next `n` requests fail with 503.
    pub fn fail_next(&self, n: usize) {
        self.inner.fail_next.store(n, Ordering::SeqCst);
    }
}

impl Drop for Emulator {
    fn drop(&mut self) {
        self.task.abort();
    }
}

fn check_request(inner: &Inner, headers: &HeaderMap) -> Result<(), StatusCode> {
    if inner
        .fail_next
        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
        .is_ok()
    {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    let signed = headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("AWS4-HMAC-SHA256 Credential=") && v.contains("Signature="));
    if !signed || !headers.contains_key("x-amz-date") {
        return Err(StatusCode::FORBIDDEN);
    }
    Ok(())
}

async fn get_object(
    State(inner): State<Arc<Inner>>,
    Path((bucket, key)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Bytes, StatusCode> {
    check_request(&inner, &headers)?;
    inner
        .objects
        .lock()
        .get(&(bucket, key))
        .cloned()
        .ok_or(StatusCode::NOT_FOUND)
}

async fn put_object(
    State(inner): State<Arc<Inner>>,
    Path((bucket, key)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> StatusCode {
    if let Err(status) = check_request(&inner, &headers) {
        return status;
    }
    let declared = headers
        .get("x-amz-content-sha256")
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default();
    if declared != "UNSIGNED-PAYLOAD" && declared != hex::encode(Sha256::digest(&body)) {
        return StatusCode::BAD_REQUEST;
    }
    inner.objects.lock().insert((bucket, key), body);
    inner.puts.fetch_add(1, Ordering::SeqCst);
    StatusCode::OK
}
