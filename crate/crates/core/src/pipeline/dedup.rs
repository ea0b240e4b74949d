use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::minhash::{estimate_jaccard, MinHashConfig, MinHasher};
use super::RawFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Keep,
    ExactDuplicateOf(String),
    FuzzyDuplicateOf { of: String, similarity: f64 },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Keep => "Keep",
            Verdict::ExactDuplicateOf(_) => "ExactDuplicate",
            Verdict::FuzzyDuplicateOf { .. } => "FuzzyDuplicate",
        }
    }

    pub fn duplicate_of(&self) -> Option<&str> {
        match self {
            Verdict::Keep => None,
            Verdict::ExactDuplicateOf(p) => Some(p),
            Verdict::FuzzyDuplicateOf { of, .. } => Some(of),
        }
    }

    pub fn similarity(&self) -> Option<f64> {
        match self {
            Verdict::FuzzyDuplicateOf { similarity, .. } => Some(*similarity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupDecision {
    pub file: String,
    pub verdict: Verdict,
}

pub fn sha256_hex(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

fn sorted_by_path(files: &[RawFile]) -> Vec<&RawFile> {
    let mut order: Vec<&RawFile> = files.iter().collect();
    order.sort_by(|a, b| a.path.cmp(&b.path));
    order
}

/// SHA-256 grouping; the lexicographically smallest path of each group is
/// kept. Decisions come back in path order.
pub fn exact_dedup(files: &[RawFile]) -> Vec<DedupDecision> {
    let order = sorted_by_path(files);
    let hashes: Vec<String> = order.par_iter().map(|f| sha256_hex(&f.content)).collect();
    let mut first_seen: HashMap<&str, &str> = HashMap::new();
    order
        .iter()
        .zip(&hashes)
        .map(|(f, h)| {
            let verdict = match first_seen.get(h.as_str()) {
                Some(kept) => Verdict::ExactDuplicateOf(kept.to_string()),
                None => {
                    first_seen.insert(h, &f.path);
                    Verdict::Keep
                }
            };
            DedupDecision {
                file: f.path.clone(),
                verdict,
            }
        })
        .collect()
}

/// MinHash near-duplicate pass. A file is a fuzzy duplicate when its
/// estimated Jaccard similarity to some earlier kept file reaches
/// `threshold`; the most similar kept file is reported, ties going to the
/// earlier path. Files too short to shingle are always kept.
pub fn fuzzy_dedup(files: &[RawFile], cfg: &MinHashConfig, threshold: f64) -> Vec<DedupDecision> {
    let order = sorted_by_path(files);
    let hasher = match MinHasher::new(cfg) {
        Ok(h) => h,
        Err(_) => {
            return order
                .iter()
                .map(|f| DedupDecision {
                    file: f.path.clone(),
                    verdict: Verdict::Keep,
                })
                .collect()
        }
    };
    let signatures: Vec<Option<Vec<u64>>> = order
        .par_iter()
        .map(|f| hasher.signature(&f.content).ok())
        .collect();

    let mut kept: Vec<(&str, &Vec<u64>)> = Vec::new();
    let mut out = Vec::with_capacity(order.len());
    for (f, sig) in order.iter().zip(&signatures) {
        let verdict = match sig {
            None => Verdict::Keep,
            Some(sig) => {
                let mut best: Option<(&str, f64)> = None;
                for (path, other) in &kept {
                    let sim = estimate_jaccard(sig, other);
                    if sim >= threshold && best.is_none_or(|(_, b)| sim > b) {
                        best = Some((path, sim));
                    }
                }
                match best {
                    Some((of, similarity)) => Verdict::FuzzyDuplicateOf {
                        of: of.to_string(),
                        similarity,
                    },
                    None => {
                        kept.push((&f.path, sig));
                        Verdict::Keep
                    }
                }
            }
        };
        out.push(DedupDecision {
            file: f.path.clone(),
            verdict,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(path: &str, content: &str) -> RawFile {
        RawFile::new(path, content)
    }

    #[test]
    fn identical_pair() {
        let d = exact_dedup(&[f("b.c", "int x;"), f("a.c", "int x;")]);
        assert_eq!(d[0].file, "a.c");
        assert_eq!(d[0].verdict, Verdict::Keep);
        assert_eq!(d[1].verdict, Verdict::ExactDuplicateOf("a.c".into()));
    }

    #[test]
    fn distinct_all_kept() {
        let d = exact_dedup(&[f("a.c", "1"), f("b.c", "2"), f("c.c", "3")]);
        assert!(d.iter().all(|x| x.verdict == Verdict::Keep));
    }

    #[test]
    fn three_files_two_identical() {
        let d = exact_dedup(&[f("z.c", "same"), f("m.c", "other"), f("a.c", "same")]);
        let dups: Vec<_> = d
            .iter()
            .filter(|x| matches!(x.verdict, Verdict::ExactDuplicateOf(_)))
            .collect();
        assert_eq!(dups.len(), 1);
        assert_eq!(dups[0].file, "z.c");
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn unrelated_files_kept() {
        let a = "int add(int a, int b) { return a + b; } int sub(int a, int b) { return a - b; }";
        let b = "struct point { double x; double y; }; double norm(struct point p) { return sqrt(p.x*p.x + p.y*p.y); }";
        let d = fuzzy_dedup(&[f("a.c", a), f("b.c", b)], &MinHashConfig::default(), 0.85);
        assert!(d.iter().all(|x| x.verdict == Verdict::Keep));
    }

    #[test]
    fn short_files_are_kept() {
        let d = fuzzy_dedup(
            &[f("a.c", "x;"), f("b.c", "x;")],
            &MinHashConfig::default(),
            0.5,
        );
        assert!(d.iter().all(|x| x.verdict == Verdict::Keep));
    }
}
