//! HTTP front end of the corpus platform, mounted under `/api/v1`.

mod auth;
mod error;
mod routes;
pub mod upload;

#[cfg(feature = "testing")]
pub mod testing;

use std::future::Future;
use std::sync::Arc;

use axum::Router;
use signcorpus_core::Platform;
use tokio::net::TcpListener;

pub use auth::IDEMPOTENCY_KEY;
pub use error::{status_for, ApiError, ErrorBody};

pub type AppState = Arc<Platform>;

pub const API_PREFIX: &str = "/api/v1";

pub fn router(platform: Arc<Platform>) -> Router {
    Router::new().nest(API_PREFIX, routes::api(&platform)).with_state(platform)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    platform: Arc<Platform>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    axum::serve(listener, router(platform)).with_graceful_shutdown(shutdown).await
}

/// Runs a synchronous platform call off the async workers.
pub(crate) async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> signcorpus_core::Result<T> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::from)
}
