//! MinHash signatures over token shingles.
//!
//! Each permutation is `h_i(x) = mix(x ^ key_i)` where `mix` is the
//! SplitMix64 finalizer and the keys come from a SplitMix64 stream seeded by
//! the config, so signatures are reproducible across runs and platforms.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::tokens;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinHashConfig {
    pub shingle_k: usize,
    pub num_perms: usize,
    pub seed: u64,
}

impl Default for MinHashConfig {
    fn default() -> Self {
        Self {
            shingle_k: 5,
            num_perms: 128,
            seed: 0x5eed_cafe,
        }
    }
}

impl MinHashConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.shingle_k == 0 {
            errs.push("pipeline.minhash.shingle_k must be at least 1".to_string());
        }
        if self.num_perms == 0 {
            errs.push("pipeline.minhash.num_perms must be at least 1".to_string());
        }
        errs
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinHashError {
    #[error("content has {tokens} tokens, fewer than the shingle size {shingle_k}")]
    EmptyContent { tokens: usize, shingle_k: usize },
    #[error("invalid minhash config: {0}")]
    InvalidConfig(String),
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(state, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Hashes of all `k`-token shingles of `content`, deduplicated.
pub fn shingle_hashes(content: &str, k: usize) -> Vec<u64> {
    let toks: Vec<&str> = tokens(content).map(|t| t.text).collect();
    if k == 0 || toks.len() < k {
        return Vec::new();
    }
    let mut seen = HashSet::with_capacity(toks.len());
    let mut out = Vec::with_capacity(toks.len());
    for window in toks.windows(k) {
        let mut h = FNV_OFFSET;
        for t in window {
            h = fnv1a(h, t.as_bytes());
            h = fnv1a(h, &[0xff]);
        }
        if seen.insert(h) {
            out.push(h);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MinHasher {
    keys: Vec<u64>,
    shingle_k: usize,
}

impl MinHasher {
    pub fn new(cfg: &MinHashConfig) -> Result<Self, MinHashError> {
        if let Some(err) = cfg.validate().into_iter().next() {
            return Err(MinHashError::InvalidConfig(err));
        }
        let mut state = cfg.seed;
        let keys = (0..cfg.num_perms)
            .map(|_| {
                state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
                splitmix64(state)
            })
            .collect();
        Ok(Self {
            keys,
            shingle_k: cfg.shingle_k,
        })
    }

    pub fn num_perms(&self) -> usize {
        self.keys.len()
    }

    pub fn signature(&self, content: &str) -> Result<Vec<u64>, MinHashError> {
        let hashes = shingle_hashes(content, self.shingle_k);
        if hashes.is_empty() {
            return Err(MinHashError::EmptyContent {
                tokens: tokens(content).count(),
                shingle_k: self.shingle_k,
            });
        }
        Ok(self.signature_from_hashes(hashes))
    }

    /// Signature of an arbitrary set of pre-hashed shingles.
    pub fn signature_from_hashes<I: IntoIterator<Item = u64>>(&self, hashes: I) -> Vec<u64> {
        let mut sig = vec![u64::MAX; self.keys.len()];
        for h in hashes {
            for (slot, &key) in sig.iter_mut().zip(&self.keys) {
                let v = splitmix64(h ^ key);
                if v < *slot {
                    *slot = v;
                }
            }
        }
        sig
    }
}

pub fn minhash_signature(content: &str, cfg: &MinHashConfig) -> Result<Vec<u64>, MinHashError> {
    MinHasher::new(cfg)?.signature(content)
}

/// Fraction of agreeing signature slots.
pub fn estimate_jaccard(a: &[u64], b: &[u64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / n as f64
}
