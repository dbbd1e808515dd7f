use std::collections::HashSet;

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use signcorpus_core::domain::{ContentType, Prompt, TrimWindow, UserProfile};
use signcorpus_core::platform::{
    AnnotationInput, AnnotationValidationInput, AnnotationVerdict, ExportFilter, VideoValidationInput, VideoVerdict,
};
use signcorpus_core::stats::{compute_stats, ManifestEntry};
use signcorpus_core::testkit::*;
use unicode_normalization::UnicodeNormalization;

use crate::common::{block_on, words};

async fn validated(w: &World, crew: &[UserProfile], i: usize, prompt: &Prompt, trim: TrimWindow, script: Option<String>) {
    let pick = |k: usize| &crew[(i + k) % crew.len()];
    let mut new = new_recording(prompt, w.upload().await, trim.end_ms + 300);
    new.trim = trim;
    let rec = w.platform.submit_recording(pick(0), new, None).await.expect("record");
    let verdict = VideoValidationInput { verdict: VideoVerdict::Correct, corrections: None };
    w.platform.submit_video_validation(pick(1), &rec.id, verdict, None).expect("validate");
    let reference = script.clone().unwrap_or_else(|| prompt.content.clone());
    let tracks = vec![sentence_track(&reference, &prompt.language, trim), gloss_track(&reference, trim)];
    w.platform
        .submit_annotation(pick(2), &rec.id, AnnotationInput { tracks, script }, None)
        .expect("annotate");
    let accept = AnnotationValidationInput { verdict: AnnotationVerdict::Accepted, tracks: None };
    w.platform.submit_annotation_validation(pick(3), &rec.id, accept, None).expect("review");
}

struct Recount {
    count: u64,
    scripted: u64,
    words: u64,
    unique: u64,
    total_ms: i64,
}

fn recount(rows: &[Value]) -> Recount {
    let mut r = Recount { count: 0, scripted: 0, words: 0, unique: 0, total_ms: 0 };
    let mut vocab = HashSet::new();
    for row in rows {
        r.count += 1;
        let text = if row["prompt"]["content_type"] == "text" {
            r.scripted += 1;
            row["prompt"]["content"].as_str().expect("content")
        } else {
            row["script"].as_str().expect("script")
        };
        for w in words(text) {
            r.words += 1;
            vocab.insert(w.nfc().collect::<String>().to_lowercase());
        }
        r.total_ms += row["trim"]["end_ms"].as_i64().expect("end") - row["trim"]["start_ms"].as_i64().expect("start");
    }
    r.unique = vocab.len() as u64;
    r
}

fn line<'a>(lines: &'a str, key: &str) -> &'a str {
    lines
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
        .expect("stat line")
}

pub fn run() {
    block_on(async {
        let w = World::new();
        let empty = w.platform.corpus_stats(&ExportFilter::default()).expect("stats");
        assert_eq!(empty.recording_count, 0);
        assert_eq!((empty.avg_words_per_recording, empty.avg_duration_s), (None, None));
        let lines = empty.to_lines();
        assert_eq!(line(&lines, "avg_words_per_recording"), "null");
        assert_eq!(line(&lines, "avg_duration_s"), "null");
        assert_eq!(line(&lines, "total_duration_hours"), "0.000");

        let en: Vec<_> = (0..4).map(|i| w.user(&format!("en{i}"), ENGLISH, &[])).collect();
        let bn: Vec<_> = (0..4).map(|i| w.user(&format!("bn{i}"), BANGLA, &[])).collect();
        let ps = w.prompts(&[
            ("The cat sat on the mat.", "text", ENGLISH),
            ("Where is the station? Turn left, then right.", "text", ENGLISH),
            ("Hello, Hello; HELLO: hello!", "text", ENGLISH),
            ("Weekend plans", "topic", ENGLISH),
            ("আমি আগামীকাল বেড়াতে যাবো।", "text", BANGLA),
            ("আমার গ্রাম", "topic", BANGLA),
        ]);
        let vocabulary = ["river", "Cafe\u{301}", "café", "boat", "নদী", "Moon", "moon", "নৌকা"];
        let mut rng = StdRng::seed_from_u64(5);
        for i in 0..100 {
            let prompt = &ps[rng.random_range(0..ps.len())];
            let crew = if prompt.language.as_str() == ENGLISH { &en } else { &bn };
            let start = rng.random_range(0..2000);
            let trim = TrimWindow::new(start, start + rng.random_range(2000..20_000));
            let script = (prompt.content_type == ContentType::Topic).then(|| {
                (0..rng.random_range(5..8))
                    .map(|_| {
                        let n = rng.random_range(1..5);
                        let ws: Vec<_> = (0..n).map(|_| vocabulary[rng.random_range(0..vocabulary.len())]).collect();
                        format!("{}.", ws.join(" "))
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            });
            validated(&w, crew, i, prompt, trim, script).await;
        }
        // Pending recordings must not count.
        w.record(&en[0], &ps[1], 5000).await;

        let date = NaiveDate::from_ymd_opt(2026, 5, 1).expect("date");
        let report = w
            .platform
            .export_snapshot(&ExportFilter::default(), &w.dir.path().join("out"), date)
            .await
            .expect("export");
        let rows: Vec<Value> = std::fs::read_to_string(report.dir.join("manifest.jsonl"))
            .expect("manifest")
            .lines()
            .map(|l| serde_json::from_str(l).expect("json line"))
            .collect();
        let r = recount(&rows);
        let s = &report.stats;
        assert_eq!(r.count, 100);
        assert_eq!(
            (s.recording_count, s.scripted_count, s.spontaneous_count, s.total_words, s.unique_words),
            (r.count, r.scripted, r.count - r.scripted, r.words, r.unique)
        );
        assert!((s.total_duration_hours - r.total_ms as f64 / 3_600_000.0).abs() < 1e-9);
        assert!((s.avg_words_per_recording.expect("avg") - r.words as f64 / r.count as f64).abs() < 1e-9);
        assert!((s.avg_duration_s.expect("avg") - r.total_ms as f64 / 1000.0 / r.count as f64).abs() < 1e-9);
        assert_eq!(*s, w.platform.corpus_stats(&ExportFilter::default()).expect("stats"));

        // 1,000 synthetic rows: 704 of eight words and 296 of seven, 13.374 s each.
        let template = rows.iter().find(|r| r["prompt"]["content_type"] == "text").expect("text row").clone();
        let entries: Vec<ManifestEntry> = (0..1000)
            .map(|i| {
                let mut row = template.clone();
                let n = if i < 704 { 8 } else { 7 };
                row["prompt"]["content"] = Value::from(vec!["শব্দ"; n].join(" "));
                row["trim"] = serde_json::json!({"start_ms": 1000, "end_ms": 14_374});
                serde_json::from_value(row).expect("entry")
            })
            .collect();
        let lines = compute_stats(&entries).to_lines();
        assert_eq!(line(&lines, "avg_words_per_recording"), "7.704");
        assert_eq!(line(&lines, "avg_duration_s"), "13.374");
        assert_eq!(line(&lines, "total_duration_hours"), "3.715");
        assert_eq!(line(&lines, "unique_words"), "1");
    });
}
