use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use async_trait::async_trait;
use bytes::Bytes;

use crate::spool::spool;
use crate::{ByteStream, ObjectKey, ObjectStore, Result, StoreError};

/// Objects as files under `root`, at paths mirroring their keys.
///
/// In-flight uploads live in `root/.incoming` and are renamed into place on
/// completion, so readers never observe a partial object.
#[derive(Debug, Clone)]
pub struct LocalStore {
    root: PathBuf,
    max_object_bytes: u64,
}

const INCOMING: &str = ".incoming";

impl LocalStore {
    pub fn open(root: impl Into<PathBuf>, max_object_bytes: u64) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(root.join(INCOMING))?;
        Ok(LocalStore {
            root,
            max_object_bytes,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_of(&self, key: &ObjectKey) -> PathBuf {
        self.root.join(key.kind().prefix()).join(format!(
            "{}{}",
            key.digest_hex(),
            key.ext()
        ))
    }
}

#[async_trait]
impl ObjectStore for LocalStore {
    async fn put_stream(&self, body: ByteStream, ext: &str) -> Result<ObjectKey> {
        // Validate the extension before reading any of the body.
        crate::ObjectKind::for_ext(ext)?;
        let spooled = spool(body, &self.root.join(INCOMING), self.max_object_bytes).await?;
        let key = ObjectKey::from_digest(spooled.digest, ext)?;
        let dest = self.path_of(&key);
        if tokio::fs::try_exists(&dest).await? {
            return Ok(key);
        }
        if let Some(parent) = dest.parent() {
            tokio::fs::create_dir_all(parent).await?;
        }
        // Rename is atomic; two writers of the same content converge on one file.
        spooled
            .file
            .persist(&dest)
            .map_err(|e| StoreError::Backend(e.to_string()))?;
        tracing::debug!(%key, bytes = spooled.len, "stored object");
        Ok(key)
    }

    async fn get_object(&self, key: &ObjectKey) -> Result<Bytes> {
        match tokio::fs::read(self.path_of(key)).await {
            Ok(bytes) => Ok(Bytes::from(bytes)),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(StoreError::NotFound(key.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    async fn exists(&self, key: &ObjectKey) -> Result<bool> {
        Ok(tokio::fs::try_exists(self.path_of(key)).await?)
    }

    fn max_object_bytes(&self) -> u64 {
        self.max_object_bytes
    }

    fn backend_name(&self) -> &'static str {
        "local"
    }

    async fn copy_to_path(&self, key: &ObjectKey, dest: &Path) -> Result<()> {
        match tokio::fs::copy(self.path_of(key), dest).await {
            Ok(_) => Ok(()),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(StoreError::NotFound(key.to_string())),
            Err(e) => Err(e.into()),
        }
    }
}
