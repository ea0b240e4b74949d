use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AdoptionError, ScoredEntry};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BucketMetric {
    Lcp,
    RougeLcp,
}

/// ROUGE-LCP binning: `width`-wide bins over `[0, 1)`, a bucket at exactly
/// 1, right-closed `overflow_width` bins up to `overflow_max`, then one bin
/// for everything beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub width: f64,
    pub overflow_width: f64,
    pub overflow_max: f64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self {
            width: 0.05,
            overflow_width: 0.25,
            overflow_max: 2.0,
        }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.width > 0.0 && self.width <= 1.0) {
            errs.push(format!("bin_width must lie in (0, 1], got {}", self.width));
        }
        if !(self.overflow_width > 0.0 && self.overflow_width.is_finite()) {
            errs.push(format!(
                "overflow_width must be positive, got {}",
                self.overflow_width
            ));
        }
        if !(self.overflow_max > 1.0 && self.overflow_max.is_finite()) {
            errs.push(format!(
                "overflow_max must exceed 1, got {}",
                self.overflow_max
            ));
        }
        errs
    }

    fn partial_bins(&self) -> usize {
        ((1.0 / self.width) - EPS).ceil().max(1.0) as usize
    }

    fn overflow_bins(&self) -> usize {
        (((self.overflow_max - 1.0) / self.overflow_width) - EPS)
            .ceil()
            .max(1.0) as usize
    }

    pub fn key_for(&self, value: f64) -> BucketKey {
        if value < 1.0 {
            let i = ((value / self.width) + EPS).floor().max(0.0) as usize;
            BucketKey::Partial(i.min(self.partial_bins() - 1))
        } else if value == 1.0 {
            BucketKey::ExactMatch
        } else if value <= self.overflow_max {
            let j = (((value - 1.0) / self.overflow_width) - EPS)
                .ceil()
                .max(1.0) as usize
                - 1;
            BucketKey::Extension(j.min(self.overflow_bins() - 1))
        } else {
            BucketKey::Beyond
        }
    }

    /// Lower and upper edges of a ROUGE-LCP bucket.
    pub fn bounds(&self, key: BucketKey) -> (f64, f64) {
        match key {
            BucketKey::Lcp(v) => (v as f64, v as f64),
            BucketKey::Partial(i) => (
                i as f64 * self.width,
                ((i + 1) as f64 * self.width).min(1.0),
            ),
            BucketKey::ExactMatch => (1.0, 1.0),
            BucketKey::Extension(j) => (
                1.0 + j as f64 * self.overflow_width,
                (1.0 + (j + 1) as f64 * self.overflow_width).min(self.overflow_max),
            ),
            BucketKey::Beyond => (self.overflow_max, f64::INFINITY),
        }
    }

    pub fn label(&self, key: BucketKey) -> String {
        let (lo, hi) = self.bounds(key);
        match key {
            BucketKey::Lcp(v) => v.to_string(),
            BucketKey::Partial(_) => format!("[{lo:.2},{hi:.2})"),
            BucketKey::ExactMatch => "=1".to_string(),
            BucketKey::Extension(_) => format!("({lo:.2},{hi:.2}]"),
            BucketKey::Beyond => format!(">{lo:.2}"),
        }
    }
}

/// Ordered bucket identity. ROUGE-LCP keys sort by value range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BucketKey {
    Lcp(usize),
    Partial(usize),
    ExactMatch,
    Extension(usize),
    Beyond,
}

impl fmt::Display for BucketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BucketKey::Lcp(v) => write!(f, "{v}"),
            BucketKey::Partial(i) => write!(f, "partial#{i}"),
            BucketKey::ExactMatch => f.write_str("=1"),
            BucketKey::Extension(j) => write!(f, "extension#{j}"),
            BucketKey::Beyond => f.write_str("beyond"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketedStats {
    pub key: BucketKey,
    pub count: usize,
    pub adopted_count: usize,
    pub adoption_rate: f64,
}

/// Non-empty buckets in key order.
pub fn bucket_by_metric(
    entries: &[ScoredEntry],
    metric: BucketMetric,
    bins: &BinSpec,
) -> Result<Vec<BucketedStats>, AdoptionError> {
    if entries.is_empty() {
        return Err(AdoptionError::EmptyInput);
    }
    if let Some(e) = bins.validate().into_iter().next() {
        return Err(AdoptionError::InvalidBins(e));
    }
    let mut tally: BTreeMap<BucketKey, (usize, usize)> = BTreeMap::new();
    for e in entries {
        let key = match metric {
            BucketMetric::Lcp => BucketKey::Lcp(e.metrics.lcp),
            BucketMetric::RougeLcp => bins.key_for(e.metrics.rouge_lcp),
        };
        let slot = tally.entry(key).or_default();
        slot.0 += 1;
        slot.1 += e.entry.adopted as usize;
    }
    Ok(tally
        .into_iter()
        .map(|(key, (count, adopted_count))| BucketedStats {
            key,
            count,
            adopted_count,
            adoption_rate: adopted_count as f64 / count as f64,
        })
        .collect())
}
