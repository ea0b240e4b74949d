use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::{
    bucket_by_metric, daily_correlation_suite, preprocess, score_entries, AdoptionError,
    AdoptionOptions, BinSpec, BucketKey, BucketMetric, BucketedStats, DailySuite, Ingested,
    PreprocessOptions, PreprocessReport, SUITE_LABELS,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdoptionReport {
    pub malformed_lines: usize,
    pub preprocess: PreprocessReport,
    /// Entries that survived preprocessing and were scored.
    pub n_entries: usize,
    pub bins: BinSpec,
    pub lcp_buckets: Vec<BucketedStats>,
    pub rouge_lcp_buckets: Vec<BucketedStats>,
    pub daily: Option<DailySuite>,
    /// Why the daily suite is absent, if it is.
    pub daily_error: Option<String>,
}

/// Preprocesses, scores, buckets and correlates an ingested log. Empty or
/// short logs yield empty tables rather than errors; only an invalid bin
/// specification fails.
pub fn analyze(
    ingested: &Ingested,
    opts: &AdoptionOptions,
) -> Result<AdoptionReport, AdoptionError> {
    let bins = opts.bins();
    if let Some(e) = bins.validate().into_iter().next() {
        return Err(AdoptionError::InvalidBins(e));
    }
    let (kept, pre) = preprocess(
        &ingested.entries,
        PreprocessOptions {
            drop_contradictions: opts.drop_contradictions,
        },
    );
    let scored = score_entries(&kept);
    let buckets = |metric| match bucket_by_metric(&scored, metric, &bins) {
        Ok(b) => Ok(b),
        Err(AdoptionError::EmptyInput) => Ok(Vec::new()),
        Err(e) => Err(e),
    };
    let lcp_buckets = buckets(BucketMetric::Lcp)?;
    let rouge_lcp_buckets = buckets(BucketMetric::RougeLcp)?;
    let (daily, daily_error) = match daily_correlation_suite(&scored, opts.min_daily) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(AdoptionReport {
        malformed_lines: ingested.malformed,
        preprocess: pre,
        n_entries: scored.len(),
        bins,
        lcp_buckets,
        rouge_lcp_buckets,
        daily,
        daily_error,
    })
}

const README: &str = "\
# Adoption report

## lcp_distribution.csv
- `lcp`: longest common prefix length in characters
- `count`: entries with that LCP
- `adopted_count`: of those, entries the user adopted
- `adoption_rate`: adopted_count / count

## rouge_lcp_distribution.csv
- `bucket`: bin label; `[a,b)` partial match, `=1` exact match, `(a,b]` extension, `>m` beyond the last bin
- `lower`, `upper`: bin edges
- `count`, `adopted_count`, `adoption_rate`: as above

## daily_metrics.csv
One row per UTC day that met the minimum volume.
- `date`: UTC calendar date
- `n`: entries that day
- `lcp`, `rouge_lcp`, `lcs`, `rouge_l`: daily means
- `em_rate`: fraction of exact matches
- `adoption_rate`: fraction adopted

## correlation_heatmap.csv
Pearson r between every pair of daily series. Empty where a series is constant.

## summary.json
- `n_entries`: entries after preprocessing
- `malformed_lines`, `duplicates_removed`, `contradictions_removed`: removal tallies
- `days_used`, `days_excluded`: days kept and dropped by the volume filter
- `correlations`: r, two-tailed p and point count per metric against adoption rate, or an error string
- `daily_error`: why no daily analysis was possible, if so
";

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, AdoptionError> {
    csv::Writer::from_path(path).map_err(|source| AdoptionError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), AdoptionError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let wrap = |source| AdoptionError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|source| AdoptionError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), AdoptionError> {
    fs::write(path, text).map_err(|source| AdoptionError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the five report files and a README describing their columns.
pub fn emit_reports(report: &AdoptionReport, out_dir: &Path) -> Result<(), AdoptionError> {
    fs::create_dir_all(out_dir).map_err(|source| AdoptionError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_rows(
        &out_dir.join("lcp_distribution.csv"),
        &["lcp", "count", "adopted_count", "adoption_rate"],
        report.lcp_buckets.iter().map(|b| {
            let BucketKey::Lcp(v) = b.key else {
                unreachable!("lcp buckets carry integer keys")
            };
            vec![
                v.to_string(),
                b.count.to_string(),
                b.adopted_count.to_string(),
                b.adoption_rate.to_string(),
            ]
        }),
    )?;
    write_rows(
        &out_dir.join("rouge_lcp_distribution.csv"),
        &[
            "bucket",
            "lower",
            "upper",
            "count",
            "adopted_count",
            "adoption_rate",
        ],
        report.rouge_lcp_buckets.iter().map(|b| {
            let (lo, hi) = report.bins.bounds(b.key);
            vec![
                report.bins.label(b.key),
                lo.to_string(),
                if hi.is_finite() {
                    hi.to_string()
                } else {
                    String::new()
                },
                b.count.to_string(),
                b.adopted_count.to_string(),
                b.adoption_rate.to_string(),
            ]
        }),
    )?;
    let days = report
        .daily
        .as_ref()
        .map(|s| s.days.as_slice())
        .unwrap_or(&[]);
    write_rows(
        &out_dir.join("daily_metrics.csv"),
        &[
            "date",
            "n",
            "lcp",
            "rouge_lcp",
            "lcs",
            "rouge_l",
            "em_rate",
            "adoption_rate",
        ],
        days.iter().map(|d| {
            vec![
                d.date.to_string(),
                d.n.to_string(),
                d.lcp.to_string(),
                d.rouge_lcp.to_string(),
                d.lcs.to_string(),
                d.rouge_l.to_string(),
                d.em_rate.to_string(),
                d.adoption_rate.to_string(),
            ]
        }),
    )?;
    let mut header = vec!["metric"];
    header.extend(SUITE_LABELS);
    let heat_rows: Vec<Vec<String>> = match &report.daily {
        Some(s) => s
            .heatmap
            .labels
            .iter()
            .zip(&s.heatmap.values)
            .map(|(label, row)| {
                std::iter::once(label.clone())
                    .chain(row.iter().map(|v| opt(*v)))
                    .collect()
            })
            .collect(),
        None => Vec::new(),
    };
    write_rows(&out_dir.join("correlation_heatmap.csv"), &header, heat_rows)?;

    let correlations: Vec<serde_json::Value> = report
        .daily
        .iter()
        .flat_map(|s| &s.correlations)
        .map(|c| match &c.result {
            Ok(r) => {
                json!({"metric": c.metric, "r": r.r, "p_value": r.p_value, "n_points": r.n_points})
            }
            Err(e) => json!({"metric": c.metric, "error": e}),
        })
        .collect();
    let summary = json!({
        "n_entries": report.n_entries,
        "input_entries": report.preprocess.input,
        "malformed_lines": report.malformed_lines,
        "duplicates_removed": report.preprocess.duplicates_removed,
        "contradictions_removed": report.preprocess.contradictions_removed,
        "days_used": days.len(),
        "days_excluded": report.daily.as_ref().map(|s| s.excluded.len()).unwrap_or(0),
        "correlations": correlations,
        "daily_error": report.daily_error,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_text(&out_dir.join("summary.json"), &text)?;
    write_text(&out_dir.join("README.md"), README)
}
