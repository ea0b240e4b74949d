//! Filtering, cleaning, and two-stage deduplication of raw source files.

pub mod clean;
pub mod dedup;
pub mod filter;
pub mod minhash;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};
use walkdir::WalkDir;

pub use clean::{clean_file, CleanError, CleanOptions};
pub use dedup::{exact_dedup, fuzzy_dedup, sha256_hex, DedupDecision, Verdict};
pub use filter::{filter_file, FilterConfig, FilterVerdict, RejectReason};
pub use minhash::{estimate_jaccard, minhash_signature, MinHashConfig, MinHashError, MinHasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    C,
    Cpp,
    Other,
}

impl Language {
    pub fn from_path(path: &str) -> Self {
        match extension_of(path).as_deref() {
            Some("c" | "h") => Language::C,
            Some("cc" | "cpp" | "cxx" | "c++" | "hh" | "hpp" | "hxx" | "h++" | "ipp" | "inl") => {
                Language::Cpp
            }
            _ => Language::Other,
        }
    }
}

fn extension_of(path: &str) -> Option<String> {
    let name = path.rsplit('/').next().unwrap_or(path);
    let (stem, ext) = name.rsplit_once('.')?;
    if stem.is_empty() || ext.is_empty() {
        return None;
    }
    Some(ext.to_ascii_lowercase())
}

/// A source file with its repository-relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFile {
    pub path: String,
    pub content: String,
    pub language: Language,
    /// Set when the bytes were not valid UTF-8 and were decoded lossily.
    pub lossy: bool,
}

impl RawFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        let path = path.into();
        Self {
            language: Language::from_path(&path),
            path,
            content: content.into(),
            lossy: false,
        }
    }

    pub fn from_bytes(path: impl Into<String>, bytes: Vec<u8>) -> Self {
        let path = path.into();
        let (content, lossy) = match String::from_utf8(bytes) {
            Ok(s) => (s, false),
            Err(e) => (String::from_utf8_lossy(e.as_bytes()).into_owned(), true),
        };
        Self {
            language: Language::from_path(&path),
            path,
            content,
            lossy,
        }
    }

    /// Lower-cased extension without the dot.
    pub fn extension(&self) -> Option<String> {
        extension_of(&self.path)
    }
}

/// One line of `corpus.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub path: String,
    pub content: String,
    pub language: Language,
    pub sha256: String,
}

impl CorpusRecord {
    pub fn from_file(file: &RawFile) -> Self {
        Self {
            path: file.path.clone(),
            content: file.content.clone(),
            language: file.language,
            sha256: sha256_hex(&file.content),
        }
    }

    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn into_file(self) -> RawFile {
        RawFile {
            path: self.path,
            content: self.content,
            language: self.language,
            lossy: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read input {path}: {source}")]
    UnreadableInput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("walking {path}: {source}")]
    Walk {
        path: PathBuf,
        #[source]
        source: walkdir::Error,
    },
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    CorpusRecord {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("writing csv {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub clean: CleanOptions,
    pub minhash: MinHashConfig,
    pub fuzzy_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            clean: CleanOptions::default(),
            minhash: MinHashConfig::default(),
            fuzzy_threshold: 0.85,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.filter.validate();
        errs.extend(self.minhash.validate());
        if !(0.0..=1.0).contains(&self.fuzzy_threshold) {
            errs.push(format!(
                "pipeline.fuzzy_threshold ({}) must lie in [0, 1]",
                self.fuzzy_threshold
            ));
        }
        errs
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub files_seen: usize,
    pub lossy_decoded: usize,
    pub rejected: BTreeMap<String, usize>,
    pub clean_failures: usize,
    pub exact_duplicates: usize,
    pub fuzzy_duplicates: usize,
    pub kept: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Cleaned, deduplicated files in path order.
    pub kept: Vec<RawFile>,
    /// One decision per file that reached deduplication, in path order.
    pub decisions: Vec<DedupDecision>,
    pub stats: PipelineStats,
}

/// Filter, clean, exact-dedup, then fuzzy-dedup. Dedup hashes cleaned content.
pub fn run_pipeline(files: Vec<RawFile>, cfg: &PipelineConfig) -> PipelineOutput {
    let mut stats = PipelineStats {
        files_seen: files.len(),
        lossy_decoded: files.iter().filter(|f| f.lossy).count(),
        ..PipelineStats::default()
    };

    let staged: Vec<Result<RawFile, Option<RejectReason>>> = files
        .into_par_iter()
        .map(|f| match filter_file(&f, &cfg.filter) {
            FilterVerdict::Reject(reason) => Err(Some(reason)),
            FilterVerdict::Pass => clean_file(&f, &cfg.clean).map_err(|e| {
                warn!("{e}");
                None
            }),
        })
        .collect();

    let mut cleaned = Vec::with_capacity(staged.len());
    for s in staged {
        match s {
            Ok(f) => cleaned.push(f),
            Err(Some(reason)) => {
                *stats
                    .rejected
                    .entry(reason.as_str().to_string())
                    .or_default() += 1
            }
            Err(None) => stats.clean_failures += 1,
        }
    }
    cleaned.sort_by(|a, b| a.path.cmp(&b.path));

    let exact = exact_dedup(&cleaned);
    let survivors: Vec<RawFile> = cleaned
        .iter()
        .zip(&exact)
        .filter(|(_, d)| d.verdict == Verdict::Keep)
        .map(|(f, _)| f.clone())
        .collect();
    stats.exact_duplicates = exact.len() - survivors.len();

    let fuzzy = fuzzy_dedup(&survivors, &cfg.minhash, cfg.fuzzy_threshold);
    let kept: Vec<RawFile> = survivors
        .into_iter()
        .zip(&fuzzy)
        .filter(|(_, d)| d.verdict == Verdict::Keep)
        .map(|(f, _)| f)
        .collect();
    stats.fuzzy_duplicates = fuzzy.len() - kept.len();
    stats.kept = kept.len();

    let mut fuzzy_by_path: BTreeMap<&str, &Verdict> = BTreeMap::new();
    for d in &fuzzy {
        fuzzy_by_path.insert(&d.file, &d.verdict);
    }
    let decisions = exact
        .iter()
        .map(|d| match (&d.verdict, fuzzy_by_path.get(d.file.as_str())) {
            (Verdict::Keep, Some(v)) => DedupDecision {
                file: d.file.clone(),
                verdict: (*v).clone(),
            },
            _ => d.clone(),
        })
        .collect();

    info!(
        seen = stats.files_seen,
        kept = stats.kept,
        exact = stats.exact_duplicates,
        fuzzy = stats.fuzzy_duplicates,
        "pipeline finished"
    );
    PipelineOutput {
        kept,
        decisions,
        stats,
    }
}

/// Paths from a file-list manifest: one per line, blank lines and `#`
/// comments ignored.
pub fn parse_file_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.replace('\\', "/"))
        .collect()
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Reads a directory tree (hidden entries skipped) or a file-list manifest.
/// Manifest entries that cannot be read are skipped with a warning.
pub fn read_input(input: &Path) -> Result<Vec<RawFile>, PipelineError> {
    let meta = fs::metadata(input).map_err(|source| PipelineError::UnreadableInput {
        path: input.to_path_buf(),
        source,
    })?;
    if meta.is_dir() {
        let mut files = Vec::new();
        let walker = WalkDir::new(input)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
        for entry in walker {
            let entry = entry.map_err(|source| PipelineError::Walk {
                path: input.to_path_buf(),
                source,
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let bytes =
                fs::read(entry.path()).map_err(|source| PipelineError::UnreadableInput {
                    path: entry.path().to_path_buf(),
                    source,
                })?;
            files.push(RawFile::from_bytes(
                relative_path(input, entry.path()),
                bytes,
            ));
        }
        Ok(files)
    } else {
        let text = fs::read_to_string(input).map_err(|source| PipelineError::UnreadableInput {
            path: input.to_path_buf(),
            source,
        })?;
        let base = input.parent().unwrap_or(Path::new("."));
        let mut files = Vec::new();
        for rel in parse_file_list(&text) {
            let full = base.join(&rel);
            match fs::read(&full) {
                Ok(bytes) => files.push(RawFile::from_bytes(rel.trim_start_matches("./"), bytes)),
                Err(e) => warn!("skipping {}: {e}", full.display()),
            }
        }
        Ok(files)
    }
}

pub fn write_corpus(files: &[RawFile], path: &Path) -> Result<(), PipelineError> {
    let wrap = |source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(wrap)?);
    for f in files {
        let line = serde_json::to_string(&CorpusRecord::from_file(f)).expect("record serializes");
        writeln!(w, "{line}").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

pub fn read_corpus(path: &Path) -> Result<Vec<RawFile>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::UnreadableInput {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            CorpusRecord::from_json_line(l)
                .map(CorpusRecord::into_file)
                .map_err(|source| PipelineError::CorpusRecord {
                    path: path.to_path_buf(),
                    line: i + 1,
                    source,
                })
        })
        .collect()
}

pub fn write_dedup_report(decisions: &[DedupDecision], path: &Path) -> Result<(), PipelineError> {
    let wrap = |source| PipelineError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["path", "verdict", "duplicate_of", "similarity"])
        .map_err(wrap)?;
    for d in decisions {
        let sim = d
            .verdict
            .similarity()
            .map(|s| format!("{s:.6}"))
            .unwrap_or_default();
        w.write_record([
            d.file.as_str(),
            d.verdict.label(),
            d.verdict.duplicate_of().unwrap_or(""),
            sim.as_str(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `corpus.jsonl` and `dedup_report.csv` into `out_dir`.
pub fn write_outputs(output: &PipelineOutput, out_dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_corpus(&output.kept, &out_dir.join("corpus.jsonl"))?;
    write_dedup_report(&output.decisions, &out_dir.join("dedup_report.csv"))
}
