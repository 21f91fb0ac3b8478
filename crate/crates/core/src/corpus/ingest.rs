//! Raw message ingestion from the three supported containers.
//!
//! Ordering is deterministic: lexicographic by file name for .eml
//! directories, record order for mbox and JSONL. Malformed records are
//! skipped with a warning and counted; they never abort the run.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::RawMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    EmlDir,
    Mbox,
    Jsonl,
}

impl std::str::FromStr for IngestFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eml-dir" => Ok(IngestFormat::EmlDir),
            "mbox" => Ok(IngestFormat::Mbox),
            "jsonl" => Ok(IngestFormat::Jsonl),
            other => Err(format!("unknown ingest format '{other}'")),
        }
    }
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub read: usize,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} is not a directory")]
    NotADirectory { path: String },
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    raw: String,
    received_at: Option<i64>,
}

/// Read every stored message under `path`.
pub fn ingest(
    path: &Path,
    format: IngestFormat,
) -> Result<(Vec<RawMessage>, IngestReport), IngestError> {
    match format {
        IngestFormat::EmlDir => ingest_eml_dir(path),
        IngestFormat::Mbox => ingest_mbox(path),
        IngestFormat::Jsonl => ingest_jsonl(path),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn ingest_eml_dir(dir: &Path) -> Result<(Vec<RawMessage>, IngestReport), IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::NotADirectory {
            path: dir.display().to_string(),
        });
    }
    let mut report = IngestReport::default();
    let mut entries: Vec<_> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .filter(|e| {
            e.path()
                .extension()
                .map(|x| x.eq_ignore_ascii_case("eml"))
                .unwrap_or(false)
        })
        .map(|e| e.into_path())
        .collect();
    entries.sort();
    let mut messages = Vec::with_capacity(entries.len());
    for file in entries {
        match fs::read(&file) {
            Ok(raw_bytes) if !raw_bytes.is_empty() => {
                let id = file
                    .strip_prefix(dir)
                    .unwrap_or(&file)
                    .display()
                    .to_string();
                messages.push(RawMessage {
                    id,
                    source_path: file.display().to_string(),
                    raw_bytes,
                    received_at: None,
                });
                report.read += 1;
            }
            Ok(_) => {
                report.skipped += 1;
                report
                    .warnings
                    .push(format!("{}: empty file skipped", file.display()));
            }
            Err(e) => {
                report.skipped += 1;
                report
                    .warnings
                    .push(format!("{}: unreadable ({e}), skipped", file.display()));
            }
        }
    }
    Ok((messages, report))
}

fn ingest_mbox(path: &Path) -> Result<(Vec<RawMessage>, IngestReport), IngestError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mbox".to_string());
    let mut report = IngestReport::default();
    let mut messages = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let flush = |lines: &mut Vec<&str>, messages: &mut Vec<RawMessage>, report: &mut IngestReport| {
        if lines.is_empty() {
            return;
        }
        let body = lines.join("\n");
        lines.clear();
        if body.trim().is_empty() {
            report.skipped += 1;
            report.warnings.push(format!(
                "{}: empty mbox record #{} skipped",
                stem,
                messages.len() + report.skipped
            ));
            return;
        }
        let idx = messages.len();
        messages.push(RawMessage {
            id: format!("{stem}-{idx:06}"),
            source_path: path.display().to_string(),
            raw_bytes: body.into_bytes(),
            received_at: None,
        });
        report.read += 1;
    };
    for line in text.lines() {
        if line.starts_with("From ") {
            flush(&mut current, &mut messages, &mut report);
        } else {
            // restore ">From" escaping used inside mbox bodies
            current.push(line.strip_prefix('>').filter(|r| r.starts_with("From ")).unwrap_or(line));
        }
    }
    flush(&mut current, &mut messages, &mut report);
    Ok((messages, report))
}

fn ingest_jsonl(path: &Path) -> Result<(Vec<RawMessage>, IngestReport), IngestError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut report = IngestReport::default();
    let mut messages = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JsonlRecord>(&line) {
            Ok(rec) if !rec.raw.is_empty() => {
                messages.push(RawMessage {
                    id: rec.id,
                    source_path: format!("{}:{}", path.display(), lineno + 1),
                    raw_bytes: rec.raw.into_bytes(),
                    received_at: rec.received_at,
                });
                report.read += 1;
            }
            Ok(rec) => {
                report.skipped += 1;
                report
                    .warnings
                    .push(format!("line {}: record '{}' has empty raw, skipped", lineno + 1, rec.id));
            }
            Err(e) => {
                report.skipped += 1;
                report
                    .warnings
                    .push(format!("line {}: malformed record ({e}), skipped", lineno + 1));
            }
        }
    }
    for w in &report.warnings {
        log::warn!("ingest {}: {}", path.display(), w);
    }
    Ok((messages, report))
}
