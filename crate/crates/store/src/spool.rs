use std::path::Path;

use futures::StreamExt;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;
use tokio::io::AsyncWriteExt;

use crate::{ByteStream, Result, StoreError};

/// A fully received body sitting in a temp file. Dropping it deletes the file.
pub(crate) struct Spooled {
    pub file: NamedTempFile,
    pub digest: [u8; 32],
    pub len: u64,
}

/// Drains `body` into a temp file under `dir`, hashing as it goes.
///
/// Memory use is bounded by the chunk size of the incoming stream.
pub(crate) async fn spool(mut body: ByteStream, dir: &Path, limit: u64) -> Result<Spooled> {
    let file = NamedTempFile::new_in(dir)?;
    let mut out = tokio::fs::File::from_std(file.reopen()?);
    let mut hasher = Sha256::new();
    let mut len = 0u64;

    while let Some(chunk) = body.next().await {
        let chunk = chunk.map_err(|e| StoreError::Aborted(e.to_string()))?;
        len += chunk.len() as u64;
        if len > limit {
            return Err(StoreError::TooLarge { limit });
        }
        hasher.update(&chunk);
        out.write_all(&chunk).await?;
    }
    out.flush().await?;
    out.sync_data().await?;

    Ok(Spooled {
        file,
        digest: hasher.finalize().into(),
        len,
    })
}
