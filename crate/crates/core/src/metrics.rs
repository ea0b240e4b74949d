//! Completion metrics: LCP, ROUGE-LCP, LCS, ROUGE-L, exact match, BLEU, and
//! the conditional-product model of the LCP distribution.
//!
//! Lengths are counted in Unicode scalar values.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::tokens;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("index {index} out of range for a model of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(
        "conditional probability at position {position} is {value}, expected a value in [0, 1]"
    )]
    InvalidProbability { position: usize, value: f64 },
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Length of the longest common prefix of `s` and `r`.
pub fn lcp(s: &str, r: &str) -> usize {
    s.chars().zip(r.chars()).take_while(|(a, b)| a == b).count()
}

/// ROUGE-LCP with the three-way split on whether the reference is a prefix of
/// the prediction. Values above 1 are the extension case and are not clamped.
pub fn rouge_lcp(s: &str, r: &str) -> Result<f64, MetricError> {
    let r_len = r.chars().count();
    if r_len == 0 {
        return Err(MetricError::EmptyReference);
    }
    let prefix = lcp(s, r);
    let s_ext = extension_len(s, r, prefix, r_len);
    Ok((prefix + s_ext) as f64 / r_len as f64)
}

/// |S_ext|: characters the prediction emits past a fully matched reference.
fn extension_len(s: &str, r: &str, prefix: usize, r_len: usize) -> usize {
    if prefix == r_len && s != r {
        s.chars().count() - r_len
    } else {
        0
    }
}

/// Character-level longest common subsequence length.
pub fn lcs_len(s: &str, r: &str) -> usize {
    let a = chars(s);
    let b = chars(r);
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RougeLVariant {
    /// LCS / |R|.
    #[default]
    Recall,
    /// Balanced F-measure of LCS precision and recall.
    FMeasure,
}

/// ROUGE-L as LCS recall.
pub fn rouge_l(s: &str, r: &str) -> Result<f64, MetricError> {
    rouge_l_with(s, r, RougeLVariant::Recall)
}

pub fn rouge_l_with(s: &str, r: &str, variant: RougeLVariant) -> Result<f64, MetricError> {
    let r_len = r.chars().count();
    if r_len == 0 {
        return Err(MetricError::EmptyReference);
    }
    let lcs = lcs_len(s, r) as f64;
    let recall = lcs / r_len as f64;
    Ok(match variant {
        RougeLVariant::Recall => recall,
        RougeLVariant::FMeasure => {
            let s_len = s.chars().count();
            if lcs == 0.0 || s_len == 0 {
                0.0
            } else {
                let precision = lcs / s_len as f64;
                2.0 * precision * recall / (precision + recall)
            }
        }
    })
}

/// Exact match after stripping trailing whitespace from both sides.
pub fn exact_match(s: &str, r: &str) -> bool {
    s.trim_end() == r.trim_end()
}

/// Token-level BLEU with uniform weights over 1..=max_n, brevity penalty, and
/// add-one smoothing for n > 1.
pub fn bleu(s: &str, r: &str, max_n: usize) -> f64 {
    let cand: Vec<&str> = tokens(s).map(|t| t.text).collect();
    let refr: Vec<&str> = tokens(r).map(|t| t.text).collect();
    if cand.is_empty() {
        return if refr.is_empty() { 1.0 } else { 0.0 };
    }
    let max_n = max_n.max(1);
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (matched, total) = clipped_ngram_matches(&cand, &refr, n);
        let p = if n == 1 {
            if matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let c = cand.len() as f64;
    let rl = refr.len() as f64;
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    bp * (log_sum / max_n as f64).exp()
}

/// (clipped matches, candidate n-gram count) for one order `n`.
fn clipped_ngram_matches(cand: &[&str], refr: &[&str], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let mut ref_counts: HashMap<&[&str], usize> = HashMap::new();
    if refr.len() >= n {
        for g in refr.windows(n) {
            *ref_counts.entry(g).or_default() += 1;
        }
    }
    let mut cand_counts: HashMap<&[&str], usize> = HashMap::new();
    for g in cand.windows(n) {
        *cand_counts.entry(g).or_default() += 1;
    }
    let matched = cand_counts
        .iter()
        .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, cand.len() - n + 1)
}

/// All metric values for one prediction/reference pair.
///
/// Both strings are normalized by stripping trailing whitespace before any
/// metric is computed, so `em` agrees with `rouge_lcp == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub lcp: usize,
    pub rouge_lcp: f64,
    pub lcs: usize,
    pub rouge_l: f64,
    pub em: bool,
    pub bleu: f64,
    pub s_ext_len: usize,
}

impl MetricValue {
    pub fn compute(prediction: &str, reference: &str) -> Result<Self, MetricError> {
        let s = prediction.trim_end();
        let r = reference.trim_end();
        let r_len = r.chars().count();
        if r_len == 0 {
            return Err(MetricError::EmptyReference);
        }
        let prefix = lcp(s, r);
        let s_ext_len = extension_len(s, r, prefix, r_len);
        let lcs = lcs_len(s, r);
        Ok(Self {
            lcp: prefix,
            rouge_lcp: (prefix + s_ext_len) as f64 / r_len as f64,
            lcs,
            rouge_l: lcs as f64 / r_len as f64,
            em: s == r,
            bleu: bleu(s, r, 4),
            s_ext_len,
        })
    }
}

/// Per-position conditional correctness probabilities
/// `p_t = P(s_t = r_t | s_1..s_{t-1} all correct)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpDistributionModel {
    cond_probs: Vec<f64>,
}

impl LcpDistributionModel {
    pub fn new(cond_probs: Vec<f64>) -> Result<Self, MetricError> {
        for (position, &value) in cond_probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(MetricError::InvalidProbability { position, value });
            }
        }
        Ok(Self { cond_probs })
    }

    pub fn cond_probs(&self) -> &[f64] {
        &self.cond_probs
    }

    pub fn len(&self) -> usize {
        self.cond_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cond_probs.is_empty()
    }

    /// Probability that all `T` positions are correct.
    pub fn survival(&self) -> f64 {
        self.cond_probs.iter().product()
    }

    /// Mass for every `k` in `0..T`.
    pub fn pmf_table(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut run = 1.0;
        for &p in &self.cond_probs {
            out.push(run * (1.0 - p));
            run *= p;
        }
        out
    }
}

/// `P(n = k) = (prod_{t<=k} p_t) * (1 - p_{k+1})`.
pub fn lcp_pmf(model: &LcpDistributionModel, k: usize) -> Result<f64, MetricError> {
    let probs = model.cond_probs();
    if k >= probs.len() {
        return Err(MetricError::IndexOutOfRange {
            index: k,
            len: probs.len(),
        });
    }
    let head: f64 = probs[..k].iter().product();
    Ok(head * (1.0 - probs[k]))
}
