//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run alone with `cargo test -p signcorpus-cli --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

mod common;
mod c01_lifecycle;
mod c02_ingest;
mod c03_tracks;
mod c04_srt;
mod c05_stats;
mod c06_assignment;
mod c07_concurrency;
mod c08_storage;
mod c09_end_to_end;
mod c10_keypoints;

type Check = fn();

const CRITERIA: [(u8, &str, Option<Duration>, Check); 10] = [
    (1, "state machine: 35 pairs, 6 legal, 1,000 replays", Some(Duration::from_secs(1)), c01_lifecycle::run),
    (2, "csv ingest: golden files reconcile with oracle", Some(Duration::from_secs(1)), c02_ingest::run),
    (3, "annotation tracks: 1,000 generated vs checker", Some(Duration::from_secs(5)), c03_tracks::run),
    (4, "subtitles: 500 round trips and goldens", Some(Duration::from_secs(2)), c04_srt::run),
    (5, "statistics: 100-recording world vs recount", None, c05_stats::run),
    (6, "assignment: chi-square and no self-validation", None, c06_assignment::run),
    (7, "concurrency: 16 validators x 100, replays", None, c07_concurrency::run),
    (8, "storage: local and s3 emulator conformance", None, c08_storage::run),
    (9, "end to end: 3 users, 20 prompts over http", Some(Duration::from_secs(30)), c09_end_to_end::run),
    (10, "keypoints: 13,374 ms @ 30 fps accepts 400-402", None, c10_keypoints::run),
];

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, title, budget, check) in CRITERIA {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::thread::Builder::new()
            .name(format!("criterion-{n}"))
            .spawn(check)
            .expect("spawn")
            .join();
        let elapsed = started.elapsed();
        let verdict = match (outcome, budget) {
            (Err(_), _) => Err("panicked".to_string()),
            (Ok(()), Some(b)) if elapsed > b => Err(format!("over budget of {b:?}")),
            (Ok(()), _) => Ok(()),
        };
        match verdict {
            Ok(()) => println!("criterion {n:>2}: PASS  {title} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {title} ({elapsed:.2?}, {why})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
