use std::collections::HashMap;
use std::ops::Range;

use super::tree::SyntaxTree;
use super::units::extract_semantic_units;
use super::{FimSample, SegmentError};
use crate::pipeline::RawFile;
use crate::tokenize::tokens;

/// Fixed-window baseline: the token stream is split into `ceil(L / window)`
/// consecutive segments, each masked in turn. Inter-token whitespace belongs
/// to the preceding segment, so the segments tile the file.
pub fn greedy_cut_baseline(
    file: &RawFile,
    window: usize,
    mask_token: &str,
) -> Result<Vec<FimSample>, SegmentError> {
    if window == 0 {
        return Err(SegmentError::InvalidWindow);
    }
    let starts: Vec<usize> = tokens(&file.content).map(|t| t.start).collect();
    let k = starts.len().div_ceil(window);
    Ok((0..k)
        .map(|j| {
            let start = if j == 0 { 0 } else { starts[j * window] };
            let end = starts
                .get((j + 1) * window)
                .copied()
                .unwrap_or(file.content.len());
            FimSample::from_span(&file.content, start..end, mask_token, &file.path, None)
        })
        .collect())
}

fn trim_span(src: &str, span: &Range<usize>) -> Range<usize> {
    let text = &src[span.clone()];
    let lead = text.len() - text.trim_start().len();
    let trail = text.len() - text.trim_end().len();
    if lead == text.len() {
        return span.start..span.start;
    }
    span.start + lead..span.end - trail
}

/// Fraction of samples whose target is exactly one semantic unit or a
/// sequence of whole units separated only by whitespace. Leading and trailing
/// whitespace is ignored on both sides. An empty sample list scores 1.
pub fn structural_preservation_rate(samples: &[FimSample], tree: &SyntaxTree) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let src = tree.source();
    let mut ends_by_start: HashMap<usize, Vec<usize>> = HashMap::new();
    for u in extract_semantic_units(tree) {
        let t = trim_span(src, &u.byte_span);
        if t.start < t.end {
            ends_by_start.entry(t.start).or_default().push(t.end);
        }
    }

    let preserved = samples
        .iter()
        .filter(|s| {
            let span = s.span();
            if span.end > src.len()
                || !src.is_char_boundary(span.start)
                || !src.is_char_boundary(span.end)
            {
                return false;
            }
            let target = trim_span(src, &span);
            if target.start == target.end {
                return false;
            }
            // Units form a laminar family, so taking the longest unit that
            // fits at each step finds a cover whenever one exists.
            let mut pos = target.start;
            while pos < target.end {
                let Some(next) = ends_by_start
                    .get(&pos)
                    .and_then(|ends| ends.iter().copied().filter(|&e| e <= target.end).max())
                else {
                    return false;
                };
                pos = next;
                let rest = &src[pos..target.end];
                pos += rest.len() - rest.trim_start().len();
            }
            true
        })
        .count();
    preserved as f64 / samples.len() as f64
}
