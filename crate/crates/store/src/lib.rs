//! Content-addressed blob storage for recordings and keypoint sidecars.
//!
//! Every object is stored under the SHA-256 of its bytes, so a key's content
//! never changes and identical uploads collapse into one object. Bodies are
//! streamed through a spool file while the digest is computed; the object only
//! becomes visible once the whole body has arrived.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use async_trait::async_trait;
use bytes::Bytes;
use futures::stream::{self, BoxStream};

mod key;
mod local;
mod s3;
mod sigv4;
mod spool;

#[cfg(feature = "testing")]
pub mod conformance;
#[cfg(feature = "testing")]
pub mod emulator;

pub use key::{key_for, ObjectKey, ObjectKind, KEYPOINT_EXT, VIDEO_EXTS};
pub use local::LocalStore;
pub use s3::{S3Config, S3Store};

/// Default per-object size cap (512 MiB).
pub const DEFAULT_MAX_OBJECT_BYTES: u64 = 512 * 1024 * 1024;

/// A streamed request body.
pub type ByteStream = BoxStream<'static, io::Result<Bytes>>;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("extension {0:?} is not allowed")]
    BadExt(String),
    #[error("malformed object key {0:?}")]
    BadKey(String),
    #[error("object exceeds the {limit} byte cap")]
    TooLarge { limit: u64 },
    #[error("object {0} not found")]
    NotFound(String),
    #[error("upload aborted: {0}")]
    Aborted(String),
    #[error("storage backend failure: {0}")]
    Backend(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::BadExt(_) => "E_BAD_EXT",
            StoreError::BadKey(_) => "E_BAD_KEY",
            StoreError::TooLarge { .. } => "E_TOO_LARGE",
            StoreError::NotFound(_) => "E_NOT_FOUND",
            StoreError::Aborted(_) => "E_ABORTED",
            StoreError::Backend(_) => "E_BACKEND",
        }
    }

    /// Transient failures the caller may retry by re-putting the same bytes.
    pub fn is_retryable(&self) -> bool {
        matches!(self, StoreError::Backend(_))
    }
}

impl From<io::Error> for StoreError {
    fn from(err: io::Error) -> Self {
        StoreError::Backend(err.to_string())
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[async_trait]
pub trait ObjectStore: Send + Sync {
    /// Streams `body` into the store and returns its content address.
    ///
    /// Nothing becomes visible unless the stream completes without error and
    /// stays under the size cap. Re-putting identical bytes is a no-op.
    async fn put_stream(&self, body: ByteStream, ext: &str) -> Result<ObjectKey>;

    async fn get_object(&self, key: &ObjectKey) -> Result<Bytes>;

    async fn exists(&self, key: &ObjectKey) -> Result<bool>;

    /// Largest object `put_stream` accepts.
    fn max_object_bytes(&self) -> u64;

    /// Short backend name for logs and reports.
    fn backend_name(&self) -> &'static str;

    async fn put_object(&self, bytes: Bytes, ext: &str) -> Result<ObjectKey> {
        self.put_stream(Box::pin(stream::once(async move { Ok(bytes) })), ext)
            .await
    }

    /// Writes an object's bytes to `dest`, replacing any existing file.
    async fn copy_to_path(&self, key: &ObjectKey, dest: &Path) -> Result<()> {
        let bytes = self.get_object(key).await?;
        tokio::fs::write(dest, &bytes).await?;
        Ok(())
    }
}

/// Backend selection, usually built from the deployment config.
#[derive(Debug, Clone)]
pub enum StoreConfig {
    Local { root: PathBuf },
    S3(S3Config),
}

pub fn open(config: &StoreConfig, max_object_bytes: u64) -> Result<Arc<dyn ObjectStore>> {
    Ok(match config {
        StoreConfig::Local { root } => Arc::new(LocalStore::open(root, max_object_bytes)?),
        StoreConfig::S3(cfg) => Arc::new(S3Store::new(cfg.clone(), max_object_bytes)?),
    })
}
