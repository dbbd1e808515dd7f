use std::collections::BTreeMap;
use std::future::Future;
use std::path::{Path, PathBuf};

pub fn block_on<F: Future>(f: F) -> F::Output {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .expect("runtime")
        .block_on(f)
}

pub fn golden(name: &str) -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).expect("golden file")
}

/// Every regular file under `root`, keyed by relative path.
pub fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("read dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).expect("read");
                out.insert(path.strip_prefix(root).expect("prefix").to_path_buf(), bytes);
            }
        }
    }
    out
}

/// Whitespace-separated words with edge punctuation removed.
pub fn words(text: &str) -> Vec<&str> {
    const EDGE: &[char] = &['।', '?', '!', '.', ',', ';', ':'];
    text.split_whitespace()
        .map(|w| w.trim_matches(EDGE))
        .filter(|w| !w.is_empty())
        .collect()
}
