//! Black-box contract suite shared by every backend.
//!
//! Each check panics on violation. Run it against a store whose size cap is
//! small (at most 1 MiB) so the oversize case stays cheap.

use std::sync::Arc;

use bytes::Bytes;
use futures::stream;

use crate::{key_for, ByteStream, ObjectKey, ObjectStore, StoreError};

/// Counts the objects currently visible in the backend under test.
pub type ObjectCounter<'a> = &'a (dyn Fn() -> usize + Send + Sync);

fn chunked(data: Vec<u8>, chunk: usize) -> ByteStream {
    let parts: Vec<std::io::Result<Bytes>> = data
        .chunks(chunk.max(1))
        .map(|c| Ok(Bytes::copy_from_slice(c)))
        .collect();
    Box::pin(stream::iter(parts))
}

/// A stream that yields the first half of `data` and then fails.
pub fn aborted_halfway(data: Vec<u8>) -> ByteStream {
    let half = data.len() / 2;
    let parts: Vec<std::io::Result<Bytes>> = vec![
        Ok(Bytes::copy_from_slice(&data[..half])),
        Err(std::io::Error::new(
            std::io::ErrorKind::ConnectionReset,
            "client went away",
        )),
    ];
    Box::pin(stream::iter(parts))
}

fn pattern(len: usize, seed: u8) -> Vec<u8> {
    (0..len)
        .map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed))
        .collect()
}

pub async fn round_trip(store: &dyn ObjectStore) {
    for (len, seed) in [(0usize, 0u8), (1, 1), (1000, 2), (70_000, 3)] {
        let data = pattern(len, seed);
        let key = store
            .put_stream(chunked(data.clone(), 4096), ".webm")
            .await
            .unwrap();
        assert_eq!(key, key_for(&data, ".webm").unwrap());
        assert!(store.exists(&key).await.unwrap());
        assert_eq!(store.get_object(&key).await.unwrap().as_ref(), &data[..]);
    }
}

pub async fn unknown_key_not_found(store: &dyn ObjectStore) {
    let key = key_for(b"never stored", ".mp4").unwrap();
    assert!(!store.exists(&key).await.unwrap());
    assert!(matches!(
        store.get_object(&key).await,
        Err(StoreError::NotFound(_))
    ));
}

pub async fn empty_blob_key(store: &dyn ObjectStore) {
    let key = store.put_object(Bytes::new(), ".webm").await.unwrap();
    assert_eq!(
        key.to_string(),
        "videos/e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855.webm"
    );
    assert!(store.get_object(&key).await.unwrap().is_empty());
}

pub async fn idempotent_put(store: &dyn ObjectStore, count: ObjectCounter<'_>) {
    let data = Bytes::from(pattern(5000, 9));
    let before = count();
    let a = store.put_object(data.clone(), ".mp4").await.unwrap();
    let b = store.put_object(data, ".mp4").await.unwrap();
    assert_eq!(a, b);
    assert_eq!(count(), before + 1);
}

pub async fn chunking_does_not_change_key(store: &dyn ObjectStore) {
    let data = pattern(10_000, 4);
    let whole = store
        .put_object(Bytes::from(data.clone()), ".webm")
        .await
        .unwrap();
    let pieces = store.put_stream(chunked(data, 7), ".webm").await.unwrap();
    assert_eq!(whole, pieces);
}

pub async fn aborted_upload_leaves_nothing(store: &dyn ObjectStore, count: ObjectCounter<'_>) {
    let data = pattern(200_000.min(store.max_object_bytes() as usize), 5);
    let key = key_for(&data, ".webm").unwrap();
    let before = count();
    let err = store
        .put_stream(aborted_halfway(data), ".webm")
        .await
        .unwrap_err();
    assert_eq!(err.code(), "E_ABORTED");
    assert!(!store.exists(&key).await.unwrap());
    assert_eq!(count(), before);
}

pub async fn oversize_rejected(store: &dyn ObjectStore, count: ObjectCounter<'_>) {
    let cap = store.max_object_bytes();
    assert!(cap <= 1024 * 1024, "run the suite with a small cap");
    let data = pattern(cap as usize + 1, 6);
    let key = key_for(&data, ".mp4").unwrap();
    let before = count();
    let err = store
        .put_stream(chunked(data, 8192), ".mp4")
        .await
        .unwrap_err();
    assert_eq!(err.code(), "E_TOO_LARGE");
    assert!(!store.exists(&key).await.unwrap());
    assert_eq!(count(), before);

    let exact = pattern(cap as usize, 6);
    store.put_stream(chunked(exact, 8192), ".mp4").await.unwrap();
}

pub async fn bad_extension_rejected(store: &dyn ObjectStore) {
    let err = store
        .put_object(Bytes::from_static(b"x"), ".mov")
        .await
        .unwrap_err();
    assert_eq!(err.code(), "E_BAD_EXT");
}

pub async fn concurrent_identical_puts_converge(
    store: Arc<dyn ObjectStore>,
    count: ObjectCounter<'_>,
) {
    let data = Bytes::from(pattern(30_000, 7));
    let before = count();
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let store = store.clone();
            let data = data.clone();
            tokio::spawn(async move { store.put_object(data, ".webm").await })
        })
        .collect();
    let mut keys: Vec<ObjectKey> = Vec::new();
    for h in handles {
        keys.push(h.await.unwrap().unwrap());
    }
    keys.dedup();
    assert_eq!(keys.len(), 1);
    assert_eq!(count(), before + 1);
    assert_eq!(store.get_object(&keys[0]).await.unwrap(), data);
}

pub async fn copy_to_path(store: &dyn ObjectStore) {
    let dir = tempfile::tempdir().unwrap();
    let key = store
        .put_object(Bytes::from_static(b"sidecar"), ".jsonl")
        .await
        .unwrap();
    let dest = dir.path().join("out.jsonl");
    store.copy_to_path(&key, &dest).await.unwrap();
    assert_eq!(std::fs::read(&dest).unwrap(), b"sidecar");

    let missing = key_for(b"missing", ".jsonl").unwrap();
    assert_eq!(
        store
            .copy_to_path(&missing, &dir.path().join("x"))
            .await
            .unwrap_err()
            .code(),
        "E_NOT_FOUND"
    );
}

/// Names of the checks run by [`run_all`], in order.
pub const CHECKS: [&str; 10] = [
    "round_trip",
    "unknown_key_not_found",
    "empty_blob_key",
    "idempotent_put",
    "chunking_does_not_change_key",
    "aborted_upload_leaves_nothing",
    "oversize_rejected",
    "bad_extension_rejected",
    "concurrent_identical_puts_converge",
    "copy_to_path",
];

pub async fn run_all(store: Arc<dyn ObjectStore>, count: ObjectCounter<'_>) {
    round_trip(store.as_ref()).await;
    unknown_key_not_found(store.as_ref()).await;
    empty_blob_key(store.as_ref()).await;
    idempotent_put(store.as_ref(), count).await;
    chunking_does_not_change_key(store.as_ref()).await;
    aborted_upload_leaves_nothing(store.as_ref(), count).await;
    oversize_rejected(store.as_ref(), count).await;
    bad_extension_rejected(store.as_ref()).await;
    concurrent_identical_puts_converge(store.clone(), count).await;
    copy_to_path(store.as_ref()).await;
}
