use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{AdoptionError, ScoredEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub metric_name: String,
    pub r: f64,
    pub p_value: f64,
    pub n_points: usize,
}

/// Sample Pearson correlation with a two-tailed p-value from the t
/// distribution on `n - 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, AdoptionError> {
    pearson_named("pearson", xs, ys)
}

pub(crate) fn pearson_named(
    name: &str,
    xs: &[f64],
    ys: &[f64],
) -> Result<CorrelationResult, AdoptionError> {
    if xs.len() != ys.len() {
        return Err(AdoptionError::DegenerateInput(format!(
            "{name}: length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 3 {
        return Err(AdoptionError::DegenerateInput(format!(
            "{name}: need at least 3 points, got {n}"
        )));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AdoptionError::DegenerateInput(format!(
            "{name}: zero variance"
        )));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(CorrelationResult {
        metric_name: name.to_string(),
        r,
        p_value: two_tailed_p(r, n),
        n_points: n,
    })
}

/// `P(|T| >= |t|)` for `t = r sqrt(df / (1 - r^2))`, written as the
/// regularized incomplete beta `I_{df/(df+t^2)}(df/2, 1/2)`. With
/// `df + t^2 = df / (1 - r^2)` the argument reduces to `1 - r^2`.
fn two_tailed_p(r: f64, n: usize) -> f64 {
    let x = 1.0 - r * r;
    if x <= 0.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    beta_reg(df / 2.0, 0.5, x.min(1.0)).clamp(0.0, 1.0)
}

/// Row and column order of the metric heatmap.
pub const SUITE_LABELS: [&str; 6] = ["LCP", "ROUGE-LCP", "LCS", "ROUGE-L", "EM", "AdoptionRate"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMetrics {
    pub date: NaiveDate,
    pub n: usize,
    pub lcp: f64,
    pub rouge_lcp: f64,
    pub lcs: f64,
    pub rouge_l: f64,
    pub em_rate: f64,
    pub adoption_rate: f64,
}

impl DailyMetrics {
    fn column(&self, i: usize) -> f64 {
        [
            self.lcp,
            self.rouge_lcp,
            self.lcs,
            self.rouge_l,
            self.em_rate,
            self.adoption_rate,
        ][i]
    }
}

/// Correlation of one daily metric against daily adoption rate, or the
/// reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub result: Result<CorrelationResult, String>,
}

/// Pairwise `r` over [`SUITE_LABELS`]. `None` where a column is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySuite {
    pub days: Vec<DailyMetrics>,
    /// Days under the volume threshold with their entry counts.
    pub excluded: Vec<(NaiveDate, usize)>,
    pub correlations: Vec<MetricCorrelation>,
    pub heatmap: Heatmap,
}

impl DailySuite {
    /// The metric with the largest |r| against adoption rate.
    pub fn strongest(&self) -> Option<&CorrelationResult> {
        self.correlations
            .iter()
            .filter_map(|c| c.result.as_ref().ok())
            .max_by(|a, b| a.r.abs().total_cmp(&b.r.abs()))
    }

    pub fn get(&self, metric: &str) -> Option<&MetricCorrelation> {
        self.correlations.iter().find(|c| c.metric == metric)
    }
}

fn daily_means(date: NaiveDate, group: &[&ScoredEntry]) -> DailyMetrics {
    let n = group.len() as f64;
    let avg = |f: &dyn Fn(&ScoredEntry) -> f64| group.iter().map(|e| f(e)).sum::<f64>() / n;
    DailyMetrics {
        date,
        n: group.len(),
        lcp: avg(&|e| e.metrics.lcp as f64),
        rouge_lcp: avg(&|e| e.metrics.rouge_lcp),
        lcs: avg(&|e| e.metrics.lcs as f64),
        rouge_l: avg(&|e| e.metrics.rouge_l),
        em_rate: avg(&|e| f64::from(u8::from(e.metrics.em))),
        adoption_rate: avg(&|e| f64::from(u8::from(e.entry.adopted))),
    }
}

/// Groups entries by UTC date, drops days with fewer than `min_daily`
/// entries and correlates each daily metric mean with daily adoption rate.
pub fn daily_correlation_suite(
    entries: &[ScoredEntry],
    min_daily: usize,
) -> Result<DailySuite, AdoptionError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<&ScoredEntry>> = BTreeMap::new();
    for e in entries {
        by_day
            .entry(e.entry.timestamp.date_naive())
            .or_default()
            .push(e);
    }
    let mut days = Vec::new();
    let mut excluded = Vec::new();
    for (date, group) in &by_day {
        if group.len() < min_daily {
            excluded.push((*date, group.len()));
        } else {
            days.push(daily_means(*date, group));
        }
    }
    if days.len() < 3 {
        return Err(AdoptionError::InsufficientDays {
            qualifying: days.len(),
            required: 3,
        });
    }

    let columns: Vec<Vec<f64>> = (0..SUITE_LABELS.len())
        .map(|i| days.iter().map(|d| d.column(i)).collect())
        .collect();
    let adoption = &columns[SUITE_LABELS.len() - 1];
    let correlations = SUITE_LABELS[..SUITE_LABELS.len() - 1]
        .iter()
        .zip(&columns)
        .map(|(name, xs)| MetricCorrelation {
            metric: name.to_string(),
            result: pearson_named(name, xs, adoption).map_err(|e| e.to_string()),
        })
        .collect();
    let values = columns
        .iter()
        .enumerate()
        .map(|(i, a)| {
            columns
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    pearson_named(&format!("{}/{}", SUITE_LABELS[i], SUITE_LABELS[j]), a, b)
                        .ok()
                        .map(|c| c.r)
                })
                .collect()
        })
        .collect();
    Ok(DailySuite {
        days,
        excluded,
        correlations,
        heatmap: Heatmap {
            labels: SUITE_LABELS.iter().map(|s| s.to_string()).collect(),
            values,
        },
    })
}
