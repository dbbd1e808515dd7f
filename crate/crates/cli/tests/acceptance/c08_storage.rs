use std::path::Path;
use std::sync::Arc;

use bytes::Bytes;
use sha2::{Digest, Sha256};
use signcorpus_store::conformance::{self, aborted_halfway};
use signcorpus_store::emulator::Emulator;
use signcorpus_store::{LocalStore, ObjectStore, S3Store};

use crate::common::block_on;

const CAP: u64 = 256 * 1024;

fn local_objects(root: &Path) -> usize {
    ["videos", "keypoints"]
        .iter()
        .filter_map(|d| std::fs::read_dir(root.join(d)).ok())
        .map(|entries| entries.count())
        .sum()
}

async fn own_checks(store: &dyn ObjectStore, count: &dyn Fn() -> usize) {
    let empty = store.put_object(Bytes::new(), ".webm").await.expect("empty blob");
    let digest: String = Sha256::digest(b"").iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(digest, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    assert_eq!(empty.to_string(), format!("videos/{digest}.webm"));

    let data: Vec<u8> = (0..100_000u32).map(|i| (i % 251) as u8).collect();
    let before = count();
    let err = store.put_stream(aborted_halfway(data.clone()), ".mp4").await.unwrap_err();
    assert_eq!(err.code(), "E_ABORTED");
    assert_eq!(count(), before);
    let key = signcorpus_store::key_for(&data, ".mp4").expect("key");
    assert!(!store.exists(&key).await.expect("exists"));
}

pub fn run() {
    block_on(async {
        let dir = tempfile::tempdir().expect("tempdir");
        let root = dir.path().to_path_buf();
        let local: Arc<dyn ObjectStore> = Arc::new(LocalStore::open(&root, CAP).expect("local store"));
        conformance::run_all(local.clone(), &|| local_objects(&root)).await;
        own_checks(local.as_ref(), &|| local_objects(&root)).await;

        let emu = Arc::new(Emulator::start().await.expect("emulator"));
        let spool = tempfile::tempdir().expect("tempdir");
        let s3: Arc<dyn ObjectStore> =
            Arc::new(S3Store::new(emu.config("corpus", spool.path().to_path_buf()), CAP).expect("s3 store"));
        let counter = emu.clone();
        conformance::run_all(s3.clone(), &move || counter.object_count()).await;
        own_checks(s3.as_ref(), &|| emu.object_count()).await;
        assert_eq!(std::fs::read_dir(spool.path()).expect("spool").count(), 0);
    });
}
