//! Sentence splitting, word tokenization, and text normalization.

use unicode_normalization::UnicodeNormalization;

use crate::domain::LanguageCode;

/// Sentence terminators: danda, question mark, exclamation mark, full stop.
pub const SENTENCE_TERMINATORS: [char; 4] = ['।', '?', '!', '.'];

/// Punctuation stripped from both ends of a word token.
pub const TOKEN_EDGE_PUNCTUATION: [char; 7] = ['।', '?', '!', '.', ',', ';', ':'];

/// Splits running text into sentences for one language.
pub trait SentenceSplitter: Send + Sync {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Cuts after a terminator that is followed by whitespace or the end of the
/// text. The terminator stays with its sentence.
#[derive(Debug, Default, Clone, Copy)]
pub struct TerminatorSplitter;

impl SentenceSplitter for TerminatorSplitter {
    fn split(&self, text: &str) -> Vec<String> {
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut chars = text.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if !SENTENCE_TERMINATORS.contains(&c) {
                continue;
            }
            let boundary = match chars.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if boundary {
                let end = i + c.len_utf8();
                sentences.push(&text[start..end]);
                start = end;
            }
        }
        sentences.push(&text[start..]);
        sentences
            .into_iter()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    }
}

/// The splitter used for `language`. Every configured pair currently shares
/// the terminator rule.
pub fn splitter_for(_language: &LanguageCode) -> &'static dyn SentenceSplitter {
    &TerminatorSplitter
}

pub fn split_sentences(text: &str, language: &LanguageCode) -> Vec<String> {
    splitter_for(language).split(text)
}

/// Whitespace-separated words with edge punctuation removed.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(&TOKEN_EDGE_PUNCTUATION[..]))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// NFC form with runs of whitespace collapsed to one space and ends trimmed.
pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Key used when counting distinct words: NFC, then lowercase.
pub fn word_key(token: &str) -> String {
    token.nfc().collect::<String>().to_lowercase()
}
