//! Seeded completion-log generator in which adoption is driven by LCP.

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CompletionLogEntry;

const ALPHABET: &[u8] = b"abcdefghijklmnop(){};=+*_ ";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLogSpec {
    pub seed: u64,
    pub days: usize,
    pub start: NaiveDate,
    pub min_per_day: usize,
    pub max_per_day: usize,
    /// Per-day continuation probability of the prefix match is drawn from
    /// this range.
    pub quality: (f64, f64),
    /// Per-day mean reference length is drawn from this range; individual
    /// lengths vary by up to 4 characters around it.
    pub ref_len: (usize, usize),
    /// Per-day cap on the random tail after a divergence, as a fraction of
    /// the unmatched reference length.
    pub tail: (f64, f64),
    /// Adoption probability is `intercept + slope * lcp`, capped at 1.
    pub intercept: f64,
    pub slope: f64,
}

impl Default for SyntheticLogSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            days: 30,
            start: NaiveDate::from_ymd_opt(2025, 3, 3).expect("valid date"),
            min_per_day: 200,
            max_per_day: 260,
            quality: (0.3, 0.9),
            ref_len: (14, 36),
            tail: (0.0, 1.5),
            intercept: 0.05,
            slope: 0.02,
        }
    }
}

fn random_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

fn other_char(rng: &mut ChaCha8Rng, not: u8) -> char {
    loop {
        let c = ALPHABET[rng.random_range(0..ALPHABET.len())];
        if c != not {
            return c as char;
        }
    }
}

struct Day {
    q: f64,
    mean_len: usize,
    tail: f64,
}

fn one_entry(rng: &mut ChaCha8Rng, day: &Day, spec: &SyntheticLogSpec) -> (String, String, bool) {
    let q = day.q;
    let len = rng.random_range(day.mean_len.saturating_sub(4).max(1)..=day.mean_len + 4);
    let reference = random_text(rng, len);
    let mut lcp = 0;
    while lcp < len && rng.random::<f64>() < q {
        lcp += 1;
    }
    let bytes = reference.as_bytes();
    let mut prediction = reference[..lcp].to_string();
    if lcp < len {
        prediction.push(other_char(rng, bytes[lcp]));
        let tail = rng.random_range(0..=((len - lcp) as f64 * day.tail) as usize);
        prediction.push_str(&random_text(rng, tail));
    } else if rng.random::<bool>() {
        let ext = rng.random_range(1..=10usize);
        prediction.push_str(&random_text(rng, ext));
    }
    let p = (spec.intercept + spec.slope * lcp as f64).clamp(0.0, 1.0);
    (prediction, reference, rng.random::<f64>() < p)
}

/// Entries in timestamp order.
pub fn generate(spec: &SyntheticLogSpec) -> Vec<CompletionLogEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    for day in 0..spec.days {
        let date = spec.start + Duration::days(day as i64);
        let midnight = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("valid time"));
        let d = Day {
            q: rng.random_range(spec.quality.0..=spec.quality.1),
            mean_len: rng.random_range(spec.ref_len.0..=spec.ref_len.1),
            tail: rng.random_range(spec.tail.0..=spec.tail.1),
        };
        let n = rng.random_range(spec.min_per_day..=spec.max_per_day);
        let step = 86_000 / n.max(1) as i64;
        for i in 0..n {
            let (prediction, reference, adopted) = one_entry(&mut rng, &d, spec);
            out.push(CompletionLogEntry {
                timestamp: midnight + Duration::seconds(i as i64 * step),
                trigger_point: "inline".into(),
                language: if i % 2 == 0 { "c" } else { "cpp" }.into(),
                prediction,
                context: format!("/* day {day} entry {i} */\n"),
                reference,
                adopted,
            });
        }
    }
    out
}

/// `logs.jsonl` text for [`generate`].
pub fn to_jsonl(entries: &[CompletionLogEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("entries serialize"));
        s.push('\n');
    }
    s
}
