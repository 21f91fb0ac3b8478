//! Corpus ingestion and sanitization.
//!
//! Raw reported emails arrive as forwards (sometimes forwarded more than
//! once before reaching the phishing inbox), so the interesting headers are
//! the ones of the innermost original message, not the forwarder's. This
//! module ingests raw messages from disk, recovers those original headers,
//! and applies the corpus sanitization filters (SMS-like erroneous forwards,
//! reports that target a different organization).

mod ingest;
mod mime;

pub use ingest::{ingest, IngestFormat, IngestReport};
pub use mime::{recover_original_headers, HeaderLexicon, RecoverError};

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One stored raw message, exactly as received.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawMessage {
    pub id: String,
    pub source_path: String,
    #[serde(with = "raw_bytes_as_string")]
    pub raw_bytes: Vec<u8>,
    /// Unix seconds, when the container provides it (JSONL does; .eml and
    /// mbox generally do not).
    pub received_at: Option<i64>,
}

mod raw_bytes_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&String::from_utf8_lossy(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        Ok(String::deserialize(d)?.into_bytes())
    }
}

/// A sanitized email with recovered original headers.
///
/// This is the canonical corpus record: one JSON object per line, dates as
/// ISO-8601 UTC. `suspicious` is set by URL extraction and `duplicate_id`
/// by duplicate detection; both default to "not yet computed".
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Email {
    pub id: String,
    pub from_addr: String,
    pub from_domain: String,
    pub to_addr: String,
    pub date: Option<DateTime<Utc>>,
    pub subject: String,
    pub body_text: String,
    pub body_length: usize,
    #[serde(default)]
    pub suspicious: bool,
    #[serde(default)]
    pub duplicate_id: Option<u32>,
}

impl Email {
    /// Character count of `body_text` (the `body_length` invariant).
    pub fn measured_body_length(&self) -> usize {
        self.body_text.chars().count()
    }
}

/// Counts balancing `total_in == removed_sms_like + removed_other_org + retained`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanitizationReport {
    pub total_in: usize,
    pub removed_sms_like: usize,
    pub removed_other_org: usize,
    pub retained: usize,
}

#[derive(Debug, Error)]
pub enum SanitizeError {
    #[error("org_name must be non-empty")]
    EmptyOrgName,
    #[error("invalid competitor pattern '{0}': {1}")]
    BadPattern(String, regex::Error),
}

/// Sanitization configuration.
///
/// The SMS heuristic is a stand-in (the source data format of the erroneous
/// mobile-text forwards is not public): a message is SMS-like iff its body
/// is shorter than `sms_max_chars` AND no inner header block was found in
/// the body text.
#[derive(Debug)]
pub struct SanitizeConfig {
    org_re: Regex,
    competitor_res: Vec<Regex>,
    pub sms_max_chars: usize,
    lexicon: HeaderLexicon,
}

impl SanitizeConfig {
    pub fn new(
        org_name: &str,
        competitors: &[String],
        sms_max_chars: usize,
        lexicon: HeaderLexicon,
    ) -> Result<Self, SanitizeError> {
        if org_name.trim().is_empty() {
            return Err(SanitizeError::EmptyOrgName);
        }
        let word_re = |name: &str| {
            Regex::new(&format!(r"(?i)\b{}\b", regex::escape(name)))
                .map_err(|e| SanitizeError::BadPattern(name.to_string(), e))
        };
        let competitor_res = competitors
            .iter()
            .filter(|c| !c.trim().is_empty())
            .map(|c| word_re(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SanitizeConfig {
            org_re: word_re(org_name)?,
            competitor_res,
            sms_max_chars,
            lexicon,
        })
    }
}

/// Apply the corpus filters. Pure per-message; report totals balance for
/// every input permutation.
pub fn sanitize(emails: Vec<Email>, cfg: &SanitizeConfig) -> (Vec<Email>, SanitizationReport) {
    let mut report = SanitizationReport {
        total_in: emails.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(emails.len());
    for email in emails {
        if email.body_length < cfg.sms_max_chars && !cfg.lexicon.has_header_block(&email.body_text)
        {
            report.removed_sms_like += 1;
            continue;
        }
        let names_competitor = cfg.competitor_res.iter().any(|re| re.is_match(&email.body_text));
        if names_competitor && !cfg.org_re.is_match(&email.body_text) {
            report.removed_other_org += 1;
            continue;
        }
        kept.push(email);
    }
    report.retained = kept.len();
    (kept, report)
}
