use std::collections::HashSet;

use rusqlite::Transaction;

use super::{idempotent, Platform};
use crate::domain::{Prompt, PromptId, UserId};
use crate::error::{Error, Result};
use crate::ingest::{parse_prompt_csv, IngestReport, PromptDraft, RowError, RowErrorCode};
use crate::repo;

impl Platform {
    /// Registers the prompts of an admin CSV file in one transaction.
    ///
    /// Rows repeating an existing prompt, or an earlier row of the same file,
    /// count as duplicates. Languages must be configured for this deployment.
    pub fn ingest_csv(&self, bytes: &[u8]) -> Result<IngestReport> {
        self.ingest_csv_as(None, bytes)
    }

    /// [`Platform::ingest_csv`] on behalf of `by`, replaying the first report
    /// when the same idempotency key comes back.
    pub fn ingest_csv_keyed(&self, by: &UserId, bytes: &[u8], idem: Option<&str>) -> Result<IngestReport> {
        self.ingest_csv_as(Some((by, idem)), bytes)
    }

    fn ingest_csv_as(&self, keyed: Option<(&UserId, Option<&str>)>, bytes: &[u8]) -> Result<IngestReport> {
        if bytes.len() as u64 > self.settings.max_csv_bytes {
            return Err(Error::TooLarge(format!(
                "prompt file is {} bytes, limit {}",
                bytes.len(),
                self.settings.max_csv_bytes
            )));
        }
        let (drafts, errors) = parse_prompt_csv(bytes)?;
        self.repo.tx(|tx| match keyed {
            Some((user, idem)) => idempotent(tx, user, "ingest_csv", idem, || self.register_drafts(tx, drafts, errors)),
            None => self.register_drafts(tx, drafts, errors),
        })
    }

    fn register_drafts(&self, tx: &Transaction<'_>, drafts: Vec<PromptDraft>, mut errors: Vec<RowError>) -> Result<IngestReport> {
        let mut report = IngestReport::default();
        let mut seen = HashSet::new();
        let now = self.now();
        for draft in drafts {
            if !self.settings.is_configured(&draft.language) {
                errors.push(RowError {
                    row_number: draft.row_number,
                    code: RowErrorCode::BadLanguage,
                    detail: format!("language {} is not configured", draft.language),
                });
                continue;
            }
            let key = draft.dedupe_key();
            if !seen.insert(key.clone()) || repo::prompt_by_dedupe_key(tx, &key)?.is_some() {
                report.duplicates_skipped += 1;
                continue;
            }
            let prompt = Prompt {
                id: PromptId::generate(),
                content: draft.content,
                content_type: draft.content_type,
                language: draft.language,
            };
            repo::insert_prompt(tx, &prompt, &key, now)?;
            report.accepted += 1;
        }
        errors.sort_by_key(|e| e.row_number);
        report.errors = errors;
        Ok(report)
    }

    pub fn prompts(&self) -> Result<Vec<Prompt>> {
        self.repo.tx(|tx| repo::list_prompts(tx))
    }

    pub fn prompt(&self, id: &PromptId) -> Result<Prompt> {
        self.repo
            .tx(|tx| repo::get_prompt(tx, id))?
            .ok_or_else(|| Error::NoPrompt(id.to_string()))
    }
}
