use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RawFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub max_line_len: usize,
    pub min_line_len: usize,
    pub max_avg_line_len: f64,
    pub min_alnum_ratio: f64,
    pub min_total_chars: usize,
    pub excluded_extensions: BTreeSet<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_line_len: 1000,
            min_line_len: 1,
            max_avg_line_len: 100.0,
            min_alnum_ratio: 0.25,
            min_total_chars: 50,
            excluded_extensions: ["xml", "html", "json", "md"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.max_line_len == 0 {
            errs.push("pipeline.filter.max_line_len must be positive".to_string());
        }
        if self.min_line_len > self.max_line_len {
            errs.push(format!(
                "pipeline.filter.min_line_len ({}) exceeds max_line_len ({})",
                self.min_line_len, self.max_line_len
            ));
        }
        // Negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.max_avg_line_len > 0.0) {
            errs.push("pipeline.filter.max_avg_line_len must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.min_alnum_ratio) {
            errs.push(format!(
                "pipeline.filter.min_alnum_ratio ({}) must lie in [0, 1]",
                self.min_alnum_ratio
            ));
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    LineLength,
    AvgLineLength,
    AlnumRatio,
    TotalChars,
    FileType,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LineLength => "LineLength",
            Self::AvgLineLength => "AvgLineLength",
            Self::AlnumRatio => "AlnumRatio",
            Self::TotalChars => "TotalChars",
            Self::FileType => "FileType",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Pass,
    Reject(RejectReason),
}

/// Applies the rules in fixed order; the first failing rule is reported.
///
/// Blank lines are exempt from the per-line length bounds. Character counts
/// exclude line terminators.
pub fn filter_file(file: &RawFile, cfg: &FilterConfig) -> FilterVerdict {
    let mut total_chars = 0usize;
    let mut alnum = 0usize;
    let mut line_count = 0usize;
    let mut bad_line = false;
    for line in file.content.lines() {
        line_count += 1;
        let mut len = 0usize;
        for c in line.chars() {
            len += 1;
            if c.is_alphanumeric() {
                alnum += 1;
            }
        }
        total_chars += len;
        if !line.trim().is_empty() && (len > cfg.max_line_len || len < cfg.min_line_len) {
            bad_line = true;
        }
    }

    if bad_line {
        return FilterVerdict::Reject(RejectReason::LineLength);
    }
    if line_count > 0 && total_chars as f64 / line_count as f64 > cfg.max_avg_line_len {
        return FilterVerdict::Reject(RejectReason::AvgLineLength);
    }
    if total_chars > 0 && (alnum as f64 / total_chars as f64) < cfg.min_alnum_ratio {
        return FilterVerdict::Reject(RejectReason::AlnumRatio);
    }
    if total_chars < cfg.min_total_chars {
        return FilterVerdict::Reject(RejectReason::TotalChars);
    }
    if let Some(ext) = file.extension() {
        if cfg.excluded_extensions.contains(&ext) {
            return FilterVerdict::Reject(RejectReason::FileType);
        }
    }
    FilterVerdict::Pass
}
