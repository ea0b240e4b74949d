//! The single declarative build configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adoption::AdoptionOptions;
use crate::graph::SpsrOptions;
use crate::pipeline::PipelineConfig;
use crate::segment::{FimOptions, GranularityRange, SizeUnit, DEFAULT_MASK_TOKEN};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FimConfig {
    pub theta_min: usize,
    pub theta_max: usize,
    pub unit: SizeUnit,
    pub mask_token: String,
    pub seed: u64,
    pub sample_rate: f64,
}

impl Default for FimConfig {
    fn default() -> Self {
        Self {
            theta_min: 8,
            theta_max: 512,
            unit: SizeUnit::Tokens,
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            seed: 0,
            sample_rate: 1.0,
        }
    }
}

impl FimConfig {
    pub fn range(&self) -> GranularityRange {
        GranularityRange {
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            unit: self.unit,
        }
    }

    pub fn options(&self) -> FimOptions {
        FimOptions {
            range: self.range(),
            mask_token: self.mask_token.clone(),
            seed: self.seed,
            sample_rate: self.sample_rate,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.range().validate();
        if self.mask_token.is_empty() {
            errs.push("fim.mask_token must not be empty".to_string());
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            errs.push(format!(
                "fim.sample_rate ({}) must lie in (0, 1]",
                self.sample_rate
            ));
        }
        errs
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeConfig {
    pub pipeline: PipelineConfig,
    pub fim: FimConfig,
    pub graph: SpsrOptions,
    pub adoption: AdoptionOptions,
}

impl ForgeConfig {
    /// Parses TOML and applies defaults. Does not check invariants.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Every invariant violation, in section order.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.pipeline.validate();
        errs.extend(self.fim.validate());
        errs.extend(self.graph.validate());
        errs.extend(self.adoption.validate());
        errs
    }

    pub fn checked(self) -> Result<Self, ConfigError> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// SHA-256 of the canonical JSON form of the effective config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Reads, defaults and checks a config file.
pub fn validate_config(path: &Path) -> Result<ForgeConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ForgeConfig::from_toml_str(&text)?.checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PathStrategy;

    #[test]
    fn empty_file_is_all_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("forge.toml");
        fs::write(&p, "").unwrap();
        let cfg = validate_config(&p).unwrap();
        assert_eq!(cfg, ForgeConfig::default());
        assert_eq!(cfg.graph.depth, 1);
        assert_eq!(cfg.graph.breadth, 4);
        assert_eq!(cfg.graph.strategy, PathStrategy::ForwardCall);
        assert_eq!(cfg.fim.mask_token, "<mask>");
        assert_eq!(cfg.adoption.min_daily, 100);
    }

    #[test]
    fn every_violation_reported() {
        let cfg = ForgeConfig::from_toml_str(
            "[fim]\ntheta_min = 10\ntheta_max = 5\nsample_rate = 0.0\n[graph]\nbreadth = 0\n[adoption]\nbin_width = 0.0\n",
        )
        .unwrap();
        match cfg.checked() {
            Err(ConfigError::Invalid(errs)) => {
                assert_eq!(errs.len(), 4, "{errs:?}");
                assert!(errs[0].contains("theta_min"));
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ForgeConfig::from_toml_str("[graph]\nwidth = 3\n"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ForgeConfig::from_toml_str("[extras]\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn nested_sections_parse() {
        let cfg = ForgeConfig::from_toml_str(
            "[pipeline.minhash]\nnum_perms = 64\n[pipeline.clean]\nstrip_comments = true\n[graph]\nstrategy = \"field-access\"\nmax_tokens = 2048\n",
        )
        .unwrap()
        .checked()
        .unwrap();
        assert_eq!(cfg.pipeline.minhash.num_perms, 64);
        assert!(cfg.pipeline.clean.strip_comments);
        assert_eq!(cfg.graph.strategy, PathStrategy::FieldAccess);
        assert_eq!(cfg.graph.max_tokens, Some(2048));
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = ForgeConfig::default();
        let explicit = ForgeConfig::from_toml_str("[graph]\ndepth = 1\nbreadth = 4\n").unwrap();
        assert_eq!(a.hash(), explicit.hash());
        let mut b = a.clone();
        b.fim.seed = 1;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.adoption.bin_width = 0.1;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
