use std::sync::Barrier;

use signcorpus_core::lifecycle::{replay, LifecycleState};
use signcorpus_core::platform::{VideoValidationInput, VideoVerdict};
use signcorpus_core::testkit::*;

use crate::common::block_on;

const VALIDATORS: usize = 16;
const ITERATIONS: usize = 100;

fn verdict(i: usize) -> VideoValidationInput {
    let verdict = if i.is_multiple_of(2) { VideoVerdict::Correct } else { VideoVerdict::Incorrect };
    VideoValidationInput { verdict, corrections: None }
}

pub fn run() {
    let w = World::new();
    let signer = w.user("signer", ENGLISH, &[]);
    let validators: Vec<_> = (0..VALIDATORS).map(|i| w.user(&format!("v{i}"), ENGLISH, &[])).collect();
    let p = &w.prompts(&[("Good morning.", "text", ENGLISH)])[0];

    for n in 0..ITERATIONS {
        let rec = block_on(w.record(&signer, p, 8000));
        let barrier = Barrier::new(VALIDATORS);
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = validators
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (w, barrier, rid) = (&w, &barrier, &rec.id);
                    s.spawn(move || {
                        let key = format!("v{i}-{n}");
                        barrier.wait();
                        w.platform.submit_video_validation(v, rid, verdict(i), Some(&key))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("validator thread")).collect()
        });

        let winners: Vec<usize> = (0..VALIDATORS).filter(|&i| results[i].is_ok()).collect();
        assert_eq!(winners.len(), 1, "iteration {n}: {results:?}");
        for r in results.iter().filter(|r| r.is_err()) {
            assert_eq!(r.as_ref().unwrap_err().code(), "E_STALE", "iteration {n}");
        }
        let winner = winners[0];
        let state = results[winner].as_ref().expect("winner").state;
        let want = if winner.is_multiple_of(2) { LifecycleState::PendingAnnotation } else { LifecycleState::VideoRejected };
        assert_eq!(state, want);
        let events: Vec<_> = w.platform.events(&rec.id).expect("events").into_iter().map(|e| e.event).collect();
        assert_eq!(events.len(), 2);
        assert_eq!(replay(&events).expect("replay"), state);

        let counts = w.platform.repo().row_counts().expect("counts");
        for i in [winner, (winner + 1) % VALIDATORS] {
            let again = w.platform.submit_video_validation(&validators[i], &rec.id, verdict(i), Some(&format!("v{i}-{n}")));
            if i == winner {
                assert_eq!(again.expect("replay").state, state);
            } else {
                assert_eq!(again.unwrap_err().code(), "E_STALE");
            }
        }
        assert_eq!(w.platform.repo().row_counts().expect("counts"), counts, "iteration {n}");
    }
}
