use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use signcorpus_core::annotation::{AnnotationTrack, Segment, TrackKind};
use signcorpus_core::domain::{RecordingId, TrimWindow, UserId};
use signcorpus_core::srt::{parse_srt, parse_srt_for_trim, render_srt};

use crate::common::golden;

const TEXTS: [&str; 8] = ["আমি", "যাবো।", "Good morning.", "See you soon!", "a, b; c", "x", "দুই\nলাইন", "café"];

fn track(segments: Vec<Segment>) -> AnnotationTrack {
    AnnotationTrack {
        kind: TrackKind::Sentence,
        segments,
        recording_id: RecordingId::from("r"),
        annotator_id: UserId::from("u"),
    }
}

/// `HH:MM:SS,mmm` by long division.
fn stamp(ms: i64) -> String {
    let (h, rest) = (ms / 3_600_000, ms % 3_600_000);
    let (m, rest) = (rest / 60_000, rest % 60_000);
    format!("{h:02}:{m:02}:{:02},{:03}", rest / 1000, rest % 1000)
}

pub fn run() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..500 {
        let start = rng.random_range(0..5_000_000);
        let mut t = start;
        let segments: Vec<Segment> = (0..rng.random_range(1..12))
            .map(|_| {
                t += rng.random_range(0..3000);
                let a = t;
                t += rng.random_range(1..400_000);
                Segment::new(a, t, TEXTS[rng.random_range(0..TEXTS.len())])
            })
            .collect();
        let trim = TrimWindow::new(start, t + rng.random_range(0..1000));
        let tr = track(segments);
        let text = render_srt(&tr, trim).expect("valid track renders");
        assert!(text.ends_with("\n\n") && !text.contains('\r'));
        assert_eq!(parse_srt_for_trim(&text, trim).expect("parses"), tr.segments);

        let first = &tr.segments[0];
        let head = format!("1\n{} --> {}\n", stamp(first.start_ms - start), stamp(first.end_ms - start));
        assert!(text.starts_with(&head), "{text:?} vs {head:?}");
    }

    let from_zero = TrimWindow::new(0, 4_000_000);
    let single = track(vec![Segment::new(0, 1500, "আমি")]);
    assert_eq!(render_srt(&single, from_zero).expect("single").as_bytes(), golden("single.srt"));
    let long = track(vec![Segment::new(61_000, 3_661_250, "x")]);
    assert_eq!(render_srt(&long, from_zero).expect("long").as_bytes(), golden("long.srt"));
    assert_eq!(stamp(3_661_250), "01:01:01,250");
    let glosses = track(
        ["আমি", "আগামীকাল", "বেড়াতে", "যাবো"]
            .iter()
            .enumerate()
            .map(|(i, w)| Segment::new(500 + i as i64 * 1000, 1500 + i as i64 * 1000, *w))
            .collect(),
    );
    assert_eq!(
        render_srt(&glosses, TrimWindow::new(500, 4500)).expect("glosses").as_bytes(),
        golden("glosses.srt")
    );
    assert_eq!(render_srt(&track(vec![]), from_zero).unwrap_err().code(), "E_INVALID_TRACK");
    assert_eq!(parse_srt("1\n00:00:00,000 00:00:01,000\nx\n").unwrap_err().code(), "E_SRT_SYNTAX");
}
