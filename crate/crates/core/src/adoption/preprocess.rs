use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::CompletionLogEntry;

/// Marks the cursor position inside a logged context. Without it the cursor
/// is taken to be at the end of the context.
pub const CURSOR_MARKER: &str = "<cursor>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub drop_contradictions: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            drop_contradictions: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub input: usize,
    pub duplicates_removed: usize,
    pub contradictions_removed: usize,
    pub kept: usize,
}

/// Heuristic for a context that contradicts its reference: the line right
/// after the cursor already holds the reference text, so the "completion"
/// was logged after the user had typed it.
fn contradicts(entry: &CompletionLogEntry) -> bool {
    let Some(at) = entry.context.find(CURSOR_MARKER) else {
        return false;
    };
    let after = &entry.context[at + CURSOR_MARKER.len()..];
    let Some((_, rest)) = after.split_once('\n') else {
        return false;
    };
    let next = rest.lines().next().unwrap_or("");
    let reference = entry.reference.trim();
    !reference.is_empty() && next.trim() == reference
}

/// Removes exact duplicates on (context, prediction, reference), keeping the
/// earliest, then entries flagged by the contradiction heuristic.
pub fn preprocess(
    entries: &[CompletionLogEntry],
    opts: PreprocessOptions,
) -> (Vec<CompletionLogEntry>, PreprocessReport) {
    let mut order: Vec<&CompletionLogEntry> = entries.iter().collect();
    order.sort_by_key(|e| e.timestamp);
    let mut seen: HashSet<(&str, &str, &str)> = HashSet::new();
    let mut report = PreprocessReport {
        input: entries.len(),
        ..PreprocessReport::default()
    };
    let mut out = Vec::with_capacity(entries.len());
    for e in order {
        if !seen.insert((&e.context, &e.prediction, &e.reference)) {
            report.duplicates_removed += 1;
            continue;
        }
        if opts.drop_contradictions && contradicts(e) {
            report.contradictions_removed += 1;
            continue;
        }
        out.push(e.clone());
    }
    report.kept = out.len();
    (out, report)
}
