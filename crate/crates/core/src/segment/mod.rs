//! AST-based semantic unit extraction and fill-in-the-middle sample cutting,
//! plus the fixed-window greedy baseline used for comparison.

mod fim;
mod greedy;
mod tree;
mod units;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::Language;

pub use fim::{
    check_completeness, cut_corpus, cut_fim_samples, cut_fim_samples_with, CorpusCut, FimCut,
    FimOptions, FimRecord,
};
pub use greedy::{greedy_cut_baseline, structural_preservation_rate};
pub use tree::{parse_to_ast, Segmenter, SyntaxTree};
pub(crate) use units::declarator_name;
pub use units::{extract_semantic_units, reparses_as_closed};

pub const DEFAULT_MASK_TOKEN: &str = "<mask>";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SegmentError {
    #[error("{path}: language {language:?} is not supported")]
    UnsupportedLanguage { path: String, language: Language },
    #[error("{path}: parser gave up")]
    ParserFailed { path: String },
    #[error("{path}: no unit satisfies the granularity and completeness constraints")]
    NoEligibleUnits { path: String },
    #[error("greedy window must be at least 1")]
    InvalidWindow,
    #[error("invalid granularity range: {0}")]
    InvalidRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    FunctionDef,
    RecordTypeDef,
    ClassDef,
    ConditionalBranch,
    LoopBody,
    MacroDef,
}

impl UnitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitKind::FunctionDef => "FunctionDef",
            UnitKind::RecordTypeDef => "RecordTypeDef",
            UnitKind::ClassDef => "ClassDef",
            UnitKind::ConditionalBranch => "ConditionalBranch",
            UnitKind::LoopBody => "LoopBody",
            UnitKind::MacroDef => "MacroDef",
        }
    }

    /// Kinds that can stand alone at declaration level.
    pub fn is_declaration(&self) -> bool {
        matches!(
            self,
            UnitKind::FunctionDef
                | UnitKind::RecordTypeDef
                | UnitKind::ClassDef
                | UnitKind::MacroDef
        )
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub String);

impl UnitId {
    pub fn new(file: &str, span: &Range<usize>) -> Self {
        UnitId(format!("{file}:{}-{}", span.start, span.end))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A syntactically closed subtree of a parsed file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticUnit {
    pub id: UnitId,
    pub kind: UnitKind,
    pub file: String,
    pub byte_span: Range<usize>,
    pub name: Option<String>,
    /// Extra names from an enclosing `typedef`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    /// Grammar node type, e.g. `function_definition`.
    pub syntax: String,
    pub node_count: usize,
    pub token_count: usize,
}

impl SemanticUnit {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.byte_span.clone()]
    }

    pub fn size(&self, unit: SizeUnit) -> usize {
        match unit {
            SizeUnit::Tokens => self.token_count,
            SizeUnit::Nodes => self.node_count,
        }
    }

    /// Last `::` segment of the name, the key used for reference lookup.
    pub fn short_name(&self) -> Option<&str> {
        self.name
            .as_deref()
            .map(|n| n.rsplit("::").next().unwrap_or(n))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeUnit {
    #[default]
    Tokens,
    Nodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GranularityRange {
    pub theta_min: usize,
    pub theta_max: usize,
    #[serde(default)]
    pub unit: SizeUnit,
}

impl GranularityRange {
    pub fn new(theta_min: usize, theta_max: usize, unit: SizeUnit) -> Result<Self, SegmentError> {
        let r = Self {
            theta_min,
            theta_max,
            unit,
        };
        match r.validate().into_iter().next() {
            Some(e) => Err(SegmentError::InvalidRange(e)),
            None => Ok(r),
        }
    }

    pub fn tokens(theta_min: usize, theta_max: usize) -> Result<Self, SegmentError> {
        Self::new(theta_min, theta_max, SizeUnit::Tokens)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.theta_min == 0 {
            errs.push("fim.theta_min must be positive".to_string());
        }
        if self.theta_min > self.theta_max {
            errs.push(format!(
                "fim.theta_min ({}) exceeds fim.theta_max ({})",
                self.theta_min, self.theta_max
            ));
        }
        errs
    }
}

/// A masked-span training sample. `prefix + target + suffix` is the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FimSample {
    pub prefix: String,
    pub target: String,
    pub suffix: String,
    pub mask_token: String,
    pub source_file: String,
    /// `None` for greedy-window samples.
    pub unit_id: Option<UnitId>,
    pub unit_kind: Option<UnitKind>,
}

impl FimSample {
    pub fn from_span(
        source: &str,
        span: Range<usize>,
        mask_token: &str,
        source_file: &str,
        unit: Option<(&UnitId, UnitKind)>,
    ) -> Self {
        Self {
            prefix: source[..span.start].to_string(),
            target: source[span.clone()].to_string(),
            suffix: source[span.end..].to_string(),
            mask_token: mask_token.to_string(),
            source_file: source_file.to_string(),
            unit_id: unit.map(|(id, _)| id.clone()),
            unit_kind: unit.map(|(_, k)| k),
        }
    }

    pub fn span(&self) -> Range<usize> {
        self.prefix.len()..self.prefix.len() + self.target.len()
    }

    /// `prefix + mask + suffix`.
    pub fn input(&self) -> String {
        let mut s =
            String::with_capacity(self.prefix.len() + self.mask_token.len() + self.suffix.len());
        s.push_str(&self.prefix);
        s.push_str(&self.mask_token);
        s.push_str(&self.suffix);
        s
    }

    pub fn reconstruct(&self) -> String {
        let mut s =
            String::with_capacity(self.prefix.len() + self.target.len() + self.suffix.len());
        s.push_str(&self.prefix);
        s.push_str(&self.target);
        s.push_str(&self.suffix);
        s
    }
}
