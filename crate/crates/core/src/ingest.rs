//! Admin-supplied prompt files: `content,content_type,language` CSV.

use serde::{Deserialize, Serialize};

use crate::domain::{ContentType, LanguageCode};
use crate::error::{Error, Result};
use crate::text::normalize_text;

pub const HEADER: [&str; 3] = ["content", "content_type", "language"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowErrorCode {
    #[serde(rename = "E_BAD_TYPE")]
    BadType,
    #[serde(rename = "E_BAD_LANGUAGE")]
    BadLanguage,
    #[serde(rename = "E_EMPTY_CONTENT")]
    EmptyContent,
    #[serde(rename = "E_BAD_COLUMN_COUNT")]
    BadColumnCount,
}

impl RowErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RowErrorCode::BadType => "E_BAD_TYPE",
            RowErrorCode::BadLanguage => "E_BAD_LANGUAGE",
            RowErrorCode::EmptyContent => "E_EMPTY_CONTENT",
            RowErrorCode::BadColumnCount => "E_BAD_COLUMN_COUNT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based; the header is row 1.
    pub row_number: usize,
    pub code: RowErrorCode,
    pub detail: String,
}

/// A parsed row not yet registered as a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDraft {
    pub row_number: usize,
    /// Normalized (NFC, collapsed whitespace).
    pub content: String,
    pub content_type: ContentType,
    pub language: LanguageCode,
}

impl PromptDraft {
    /// Identity used for deduplication.
    pub fn dedupe_key(&self) -> String {
        dedupe_key(&self.content, self.content_type, &self.language)
    }
}

pub fn dedupe_key(content: &str, content_type: ContentType, language: &LanguageCode) -> String {
    format!(
        "{}\u{1f}{}\u{1f}{}",
        normalize_text(content),
        content_type.as_str(),
        language
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub duplicates_skipped: usize,
    pub errors: Vec<RowError>,
}

impl IngestReport {
    /// Rows accounted for; equals the data-row count of the source file.
    pub fn rows(&self) -> usize {
        self.accepted + self.duplicates_skipped + self.errors.len()
    }

    /// `key: value` lines followed by one line per row error.
    pub fn to_lines(&self) -> String {
        let mut out = format!(
            "accepted: {}\nduplicates_skipped: {}\nerrors: {}\n",
            self.accepted,
            self.duplicates_skipped,
            self.errors.len()
        );
        for e in &self.errors {
            out.push_str(&format!("error: row {} {} {}\n", e.row_number, e.code.as_str(), e.detail));
        }
        out
    }
}

/// Parses a prompt file into drafts and per-row errors.
///
/// The header must be exactly `content,content_type,language` (any case).
/// Fields follow RFC 4180 quoting; LF and CRLF line endings are accepted.
pub fn parse_prompt_csv(bytes: &[u8]) -> Result<(Vec<PromptDraft>, Vec<RowError>)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::BadHeader(format!("file is not UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(Error::BadHeader("file is empty".into())),
        Some(rec) => rec.map_err(|e| Error::BadHeader(e.to_string()))?,
    };
    let header_ok = header.len() == HEADER.len()
        && header
            .iter()
            .zip(HEADER)
            .all(|(got, want)| got.trim().eq_ignore_ascii_case(want));
    if !header_ok {
        return Err(Error::BadHeader(format!(
            "expected {:?}, found {:?}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut drafts = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in records.enumerate() {
        let row_number = i + 2;
        let err = |code, detail: String| RowError {
            row_number,
            code,
            detail,
        };
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                errors.push(err(RowErrorCode::BadColumnCount, e.to_string()));
                continue;
            }
        };
        if rec.len() != HEADER.len() {
            errors.push(err(
                RowErrorCode::BadColumnCount,
                format!("expected 3 fields, found {}", rec.len()),
            ));
            continue;
        }
        let content = normalize_text(&rec[0]);
        if content.is_empty() {
            errors.push(err(RowErrorCode::EmptyContent, "content is blank".into()));
            continue;
        }
        let Some(content_type) = ContentType::parse(rec[1].trim()) else {
            errors.push(err(
                RowErrorCode::BadType,
                format!("content_type {:?} is not text or topic", &rec[1]),
            ));
            continue;
        };
        let language = match rec[2].trim().parse::<LanguageCode>() {
            Ok(l) => l,
            Err(_) => {
                errors.push(err(
                    RowErrorCode::BadLanguage,
                    format!("language {:?} is malformed", &rec[2]),
                ));
                continue;
            }
        };
        drafts.push(PromptDraft {
            row_number,
            content,
            content_type,
            language,
        });
    }
    Ok((drafts, errors))
}

/// Writes drafts back out as a prompt file (LF endings, quoting as needed).
pub fn serialize_prompt_csv(drafts: &[PromptDraft]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for d in drafts {
        writer
            .write_record([d.content.as_str(), d.content_type.as_str(), d.language.as_str()])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("input was UTF-8")
}
