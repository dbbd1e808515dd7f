use std::collections::HashSet;

use signcorpus_core::ingest::IngestReport;
use signcorpus_core::testkit::{World, BANGLA, ENGLISH};
use unicode_normalization::UnicodeNormalization;

use crate::common::golden;

type Key = (String, String, String);

#[derive(Debug, PartialEq)]
enum Outcome {
    Accepted(Key),
    Duplicate,
    Error(&'static str),
}

/// RFC 4180 records after the header, read one character at a time.
fn records(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let (mut record, mut field) = (Vec::new(), String::new());
    let (mut quoted, mut dirty) = (false, false);
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if quoted {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => quoted = false,
                c => field.push(c),
            }
            continue;
        }
        match c {
            '"' => (quoted, dirty) = (true, true),
            ',' => {
                record.push(std::mem::take(&mut field));
                dirty = true;
            }
            '\r' => {}
            '\n' => {
                if dirty {
                    record.push(std::mem::take(&mut field));
                    out.push(std::mem::take(&mut record));
                }
                dirty = false;
            }
            c => {
                field.push(c);
                dirty = true;
            }
        }
    }
    if dirty {
        record.push(field);
        out.push(record);
    }
    out.remove(0);
    out
}

fn oracle(text: &str, existing: &HashSet<Key>) -> Vec<Outcome> {
    let mut seen = existing.clone();
    records(text)
        .into_iter()
        .map(|r| {
            if r.len() != 3 {
                return Outcome::Error("E_BAD_COLUMN_COUNT");
            }
            let content = r[0].nfc().collect::<String>().split_whitespace().collect::<Vec<_>>().join(" ");
            let kind = r[1].trim().to_lowercase();
            let lang = r[2].trim().to_string();
            if content.is_empty() {
                Outcome::Error("E_EMPTY_CONTENT")
            } else if kind != "text" && kind != "topic" {
                Outcome::Error("E_BAD_TYPE")
            } else if lang != BANGLA && lang != ENGLISH {
                Outcome::Error("E_BAD_LANGUAGE")
            } else if seen.insert((content.clone(), kind.clone(), lang.clone())) {
                Outcome::Accepted((content, kind, lang))
            } else {
                Outcome::Duplicate
            }
        })
        .collect()
}

fn reconcile(report: &IngestReport, expected: &[Outcome]) {
    assert_eq!(report.rows(), expected.len());
    let got: Vec<(usize, &str)> = report.errors.iter().map(|e| (e.row_number, e.code.as_str())).collect();
    let want: Vec<(usize, &str)> = expected
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o {
            Outcome::Error(code) => Some((i + 2, *code)),
            _ => None,
        })
        .collect();
    assert_eq!(got, want);
    let accepted = expected.iter().filter(|o| matches!(o, Outcome::Accepted(_))).count();
    let duplicates = expected.iter().filter(|o| **o == Outcome::Duplicate).count();
    assert_eq!((report.accepted, report.duplicates_skipped), (accepted, duplicates));
}

fn stored(w: &World) -> HashSet<Key> {
    w.platform
        .prompts()
        .expect("prompts")
        .into_iter()
        .map(|p| (p.content, p.content_type.as_str().to_string(), p.language.to_string()))
        .collect()
}

pub fn run() {
    let cases = [
        ("prompts_clean.csv", (4, 0, 0)),
        ("prompts_mixed.csv", (7, 2, 5)),
        ("prompts_crlf.csv", (2, 1, 0)),
    ];
    for (name, counts) in cases {
        let w = World::new();
        let bytes = golden(name);
        let text = std::str::from_utf8(&bytes).expect("utf-8");
        let expected = oracle(text, &HashSet::new());
        let report = w.platform.ingest_csv(&bytes).expect(name);
        assert_eq!((report.accepted, report.duplicates_skipped, report.errors.len()), counts, "{name}");
        reconcile(&report, &expected);
        let accepted: HashSet<Key> = expected
            .into_iter()
            .filter_map(|o| match o {
                Outcome::Accepted(k) => Some(k),
                _ => None,
            })
            .collect();
        assert_eq!(stored(&w), accepted, "{name}");

        let before = stored(&w);
        let again = w.platform.ingest_csv(&bytes).expect(name);
        reconcile(&again, &oracle(text, &before));
        assert_eq!(again.accepted, 0);
        assert_eq!(stored(&w), before);
    }

    let mixed = golden("prompts_mixed.csv");
    let w = World::new();
    let report = w.platform.ingest_csv(&mixed).expect("mixed");
    let quoted: Vec<_> = stored(&w).into_iter().map(|k| k.0).collect();
    assert!(quoted.contains(&"Hello, world.".to_string()));
    assert!(quoted.contains(&"She said \"yes\", then left.".to_string()));
    assert!(report.errors.iter().any(|e| e.code.as_str() == "E_BAD_TYPE"));
    assert!(report.errors.iter().any(|e| e.code.as_str() == "E_BAD_LANGUAGE"));
}
