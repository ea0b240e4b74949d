use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;
use tracing::debug;

use super::{AdoptionError, CompletionLogEntry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogLineError {
    #[error("invalid record: {0}")]
    Json(String),
    #[error("field {0} is empty")]
    EmptyField(&'static str),
}

/// Parses one `logs.jsonl` record. Empty predictions and blank references
/// are rejected.
pub fn parse_log_line(line: &str) -> Result<CompletionLogEntry, LogLineError> {
    let entry: CompletionLogEntry =
        serde_json::from_str(line).map_err(|e| LogLineError::Json(e.to_string()))?;
    if entry.prediction.is_empty() {
        return Err(LogLineError::EmptyField("prediction"));
    }
    if entry.reference.trim_end().is_empty() {
        return Err(LogLineError::EmptyField("reference"));
    }
    Ok(entry)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    /// Sorted by timestamp; ties keep file order.
    pub entries: Vec<CompletionLogEntry>,
    pub malformed: usize,
}

pub fn ingest_str(text: &str) -> Ingested {
    let parsed: Vec<(usize, Result<CompletionLogEntry, LogLineError>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, l)| (i, parse_log_line(l)))
        .collect();
    let mut out = Ingested::default();
    for (i, r) in parsed {
        match r {
            Ok(e) => out.entries.push(e),
            Err(e) => {
                debug!(line = i + 1, error = %e, "skipping malformed log line");
                out.malformed += 1;
            }
        }
    }
    out.entries.sort_by_key(|e| e.timestamp);
    out
}

pub fn ingest_logs(path: &Path) -> Result<Ingested, AdoptionError> {
    let text = fs::read_to_string(path).map_err(|source| AdoptionError::UnreadableSource {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ingest_str(&text))
}
