//! Completion-log analysis: ingest, cleanup, metric bucketing, daily
//! correlation against adoption rate, and report files.

mod bucket;
mod correlation;
mod ingest;
mod preprocess;
mod report;
pub mod synthetic;

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricValue;

pub use bucket::{bucket_by_metric, BinSpec, BucketKey, BucketMetric, BucketedStats};
pub use correlation::{
    daily_correlation_suite, pearson, CorrelationResult, DailyMetrics, DailySuite, Heatmap,
    MetricCorrelation, SUITE_LABELS,
};
pub use ingest::{ingest_logs, ingest_str, parse_log_line, Ingested, LogLineError};
pub use preprocess::{preprocess, PreprocessOptions, PreprocessReport, CURSOR_MARKER};
pub use report::{analyze, emit_reports, AdoptionReport};

#[derive(Debug, Error)]
pub enum AdoptionError {
    #[error("cannot read {path}: {source}")]
    UnreadableSource {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no entries to bucket")]
    EmptyInput,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("only {qualifying} day(s) meet the minimum volume; {required} required")]
    InsufficientDays { qualifying: usize, required: usize },
    #[error("invalid bin spec: {0}")]
    InvalidBins(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// One logged completion event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionLogEntry {
    #[serde(rename = "ts")]
    pub timestamp: DateTime<Utc>,
    #[serde(rename = "trigger")]
    pub trigger_point: String,
    #[serde(rename = "lang")]
    pub language: String,
    pub prediction: String,
    pub context: String,
    pub reference: String,
    pub adopted: bool,
}

/// An entry with its metrics against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub entry: CompletionLogEntry,
    pub metrics: MetricValue,
}

/// Scores entries in parallel. Entries whose reference is blank after
/// trailing-whitespace removal are dropped; ingest already rejects them.
pub fn score_entries(entries: &[CompletionLogEntry]) -> Vec<ScoredEntry> {
    entries
        .par_iter()
        .filter_map(|e| {
            MetricValue::compute(&e.prediction, &e.reference)
                .ok()
                .map(|metrics| ScoredEntry {
                    entry: e.clone(),
                    metrics,
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdoptionOptions {
    pub min_daily: usize,
    pub bin_width: f64,
    pub overflow_width: f64,
    pub overflow_max: f64,
    pub drop_contradictions: bool,
}

impl Default for AdoptionOptions {
    fn default() -> Self {
        let bins = BinSpec::default();
        Self {
            min_daily: 100,
            bin_width: bins.width,
            overflow_width: bins.overflow_width,
            overflow_max: bins.overflow_max,
            drop_contradictions: true,
        }
    }
}

impl AdoptionOptions {
    pub fn bins(&self) -> BinSpec {
        BinSpec {
            width: self.bin_width,
            overflow_width: self.overflow_width,
            overflow_max: self.overflow_max,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        self.bins()
            .validate()
            .into_iter()
            .map(|e| format!("adoption.{e}"))
            .collect()
    }
}
