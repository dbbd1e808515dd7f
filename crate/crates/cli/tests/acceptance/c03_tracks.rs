use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use signcorpus_core::annotation::{validate_track, AnnotationTrack, Segment, TrackKind, TrackRules};
use signcorpus_core::domain::{LanguageCode, RecordingId, TrimWindow, UserId};
use unicode_normalization::UnicodeNormalization;

use crate::common::words;

const VOCAB: [&str; 14] = [
    "আমি", "আগামীকাল", "বেড়াতে", "যাবো", "ভাত", "খাই", "the", "cat", "sat", "on", "mat", "café", "river", "boat",
];
const TERMINATORS: [&str; 4] = [".", "?", "!", "।"];

struct Case {
    reference: String,
    sentences: Vec<String>,
    tokens: Vec<String>,
    kind: TrackKind,
    trim: TrimWindow,
    segments: Vec<Segment>,
}

fn normalize(s: &str) -> String {
    s.nfc().collect::<String>().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Accepts iff segments are well-formed, ordered, disjoint, inside the trim,
/// and carry exactly the expected sentences or one word each.
fn checker(c: &Case) -> bool {
    let segs = &c.segments;
    let structural = segs.iter().enumerate().all(|(i, s)| {
        s.start_ms < s.end_ms
            && !s.text.trim().is_empty()
            && s.start_ms >= c.trim.start_ms
            && s.end_ms <= c.trim.end_ms
            && (i == 0 || segs[i - 1].end_ms <= s.start_ms)
    });
    let text = match c.kind {
        TrackKind::Sentence => {
            let got: Vec<String> = segs.iter().map(|s| normalize(&s.text)).collect();
            got == c.sentences
        }
        TrackKind::Gloss => {
            let per: Vec<Vec<String>> = segs
                .iter()
                .map(|s| words(&normalize(&s.text)).into_iter().map(str::to_string).collect())
                .collect();
            per.iter().all(|w| w.len() == 1) && per.iter().map(|w| w[0].clone()).eq(c.tokens.iter().cloned())
        }
    };
    structural && text
}

fn generate(rng: &mut StdRng) -> Case {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        let ws: Vec<&str> = (0..rng.random_range(1..6)).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect();
        tokens.extend(ws.iter().map(|w| w.to_string()));
        sentences.push(format!("{}{}", ws.join(" "), TERMINATORS[rng.random_range(0..4)]));
    }
    let reference = sentences.join(" ");
    let kind = if rng.random_bool(0.5) { TrackKind::Sentence } else { TrackKind::Gloss };
    let mut labels = match kind {
        TrackKind::Sentence => sentences.clone(),
        TrackKind::Gloss => tokens.clone(),
    };

    // Cosmetic changes the validator must tolerate.
    if rng.random_bool(0.2) {
        let i = rng.random_range(0..labels.len());
        labels[i] = match kind {
            TrackKind::Sentence => format!("  {}  ", labels[i].replace(' ', "   ")),
            TrackKind::Gloss => format!("{},", labels[i].nfd().collect::<String>()),
        };
    }

    let start = rng.random_range(0..1000);
    let trim = TrimWindow::new(start, start + rng.random_range(2000..20_000));
    let step = trim.duration_ms() / labels.len() as i64;
    let mut segments: Vec<Segment> = labels
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let a = trim.start_ms + i as i64 * step + rng.random_range(0..step / 4);
            let b = trim.start_ms + (i as i64 + 1) * step - rng.random_range(0..step / 4);
            Segment::new(a, b, text.clone())
        })
        .collect();

    if rng.random_bool(0.5) {
        let n = segments.len();
        let i = rng.random_range(0..n);
        match rng.random_range(0..9) {
            0 if n > 1 => {
                let j = rng.random_range(1..n);
                segments[j].start_ms = segments[j - 1].end_ms - rng.random_range(1..50);
            }
            1 if n > 1 => {
                let j = rng.random_range(1..n);
                let (a, b) = (segments[j - 1].start_ms, segments[j - 1].end_ms);
                segments[j - 1].start_ms = segments[j].start_ms;
                segments[j - 1].end_ms = segments[j].end_ms;
                segments[j].start_ms = a;
                segments[j].end_ms = b;
            }
            2 => segments[0].start_ms = trim.start_ms - rng.random_range(1..500),
            3 => segments[n - 1].end_ms = trim.end_ms + rng.random_range(1..500),
            4 => segments[i].end_ms = segments[i].start_ms - rng.random_range(0..2),
            5 => segments[i].text = VOCAB[rng.random_range(0..VOCAB.len())].to_string(),
            6 => {
                segments.remove(i);
            }
            7 if n > 1 => {
                let j = rng.random_range(1..n);
                let merged = segments.remove(j);
                segments[j - 1].text = format!("{} {}", segments[j - 1].text, merged.text);
                segments[j - 1].end_ms = merged.end_ms;
            }
            8 => segments[i].text = " \t ".to_string(),
            _ => {}
        }
    }

    Case {
        reference,
        sentences: sentences.iter().map(|s| normalize(s)).collect(),
        tokens: tokens.iter().map(|t| t.nfc().collect()).collect(),
        kind,
        trim,
        segments,
    }
}

fn track(kind: TrackKind, segments: Vec<Segment>) -> AnnotationTrack {
    AnnotationTrack {
        kind,
        segments,
        recording_id: RecordingId::from("r"),
        annotator_id: UserId::from("u"),
    }
}

pub fn run() {
    let bangla: LanguageCode = "bn-BdSL".parse().expect("code");
    let mut rng = StdRng::seed_from_u64(3);
    let (mut accepted, mut rejected) = (0, 0);
    for n in 0..1000 {
        let c = generate(&mut rng);
        let t = track(c.kind, c.segments.clone());
        let got = validate_track(&t, c.trim, &c.reference, &bangla, TrackRules::default());
        let want = checker(&c);
        assert_eq!(got.is_ok(), want, "case {n}: {:?} over {:?}: {got:?}", c.segments, c.reference);
        if want {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    assert!(accepted > 300 && rejected > 200, "unbalanced generator: {accepted}/{rejected}");

    let reference = "আমি আগামীকাল বেড়াতে যাবো";
    let trim = TrimWindow::new(0, 4000);
    let glosses = track(
        TrackKind::Gloss,
        vec![
            Segment::new(0, 1000, "আমি"),
            Segment::new(1000, 2000, "আগামীকাল"),
            Segment::new(2000, 3000, "বেড়াতে"),
            Segment::new(3000, 4000, "যাবো"),
        ],
    );
    assert_eq!(validate_track(&glosses, trim, reference, &bangla, TrackRules::default()), Ok(()));

    let overlapping = track(
        TrackKind::Gloss,
        vec![
            Segment::new(0, 2000, "আমি"),
            Segment::new(1500, 3000, "আগামীকাল"),
            Segment::new(3000, 3500, "বেড়াতে"),
            Segment::new(3500, 4000, "যাবো"),
        ],
    );
    let errs = validate_track(&overlapping, trim, reference, &bangla, TrackRules::default()).unwrap_err();
    assert_eq!((errs[0].code(), errs[0].index()), ("E_OVERLAP", 1));

    let empty = track(TrackKind::Gloss, vec![]);
    let errs = validate_track(&empty, trim, reference, &bangla, TrackRules::default()).unwrap_err();
    assert_eq!(errs[0].code(), "E_TEXT_MISMATCH");
}
