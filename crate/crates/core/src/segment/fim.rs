use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{count_errors, Segmenter, SyntaxTree};
use super::units::extract_counted;
use super::{
    FimSample, GranularityRange, SegmentError, SemanticUnit, UnitKind, DEFAULT_MASK_TOKEN,
};
use crate::pipeline::RawFile;

/// Text spliced in place of a masked unit during the completeness check.
///
/// The literal mask token is not valid C, so the check substitutes a neutral
/// construct of the same syntactic role and carries the mask in a comment.
fn placeholder(kind: UnitKind, mask_token: &str, target: &str) -> String {
    let tag = if mask_token.contains("*/") {
        " ".to_string()
    } else {
        format!("/*{mask_token}*/")
    };
    match kind {
        UnitKind::FunctionDef => tag,
        UnitKind::MacroDef => {
            if target.ends_with('\n') {
                format!("{tag}\n")
            } else {
                tag
            }
        }
        UnitKind::RecordTypeDef | UnitKind::ClassDef => format!("{tag}__forge_mask"),
        UnitKind::ConditionalBranch | UnitKind::LoopBody => format!("{tag};"),
    }
}

pub(crate) fn completeness_counted(
    seg: &mut Segmenter,
    tree: &SyntaxTree,
    span: &Range<usize>,
    kind: UnitKind,
    mask_token: &str,
    ops: &mut usize,
) -> bool {
    let src = tree.source();
    if span.start >= span.end
        || span.end > src.len()
        || !src.is_char_boundary(span.start)
        || !src.is_char_boundary(span.end)
    {
        return false;
    }
    let replacement = placeholder(kind, mask_token, &src[span.clone()]);
    let Some(masked) = seg.reparse_spliced(tree, span, &replacement) else {
        return false;
    };
    let before = count_errors(tree.root(), Some(span), ops);
    let after = count_errors(masked.root_node(), None, ops);
    after <= before
}

/// True iff masking the unit leaves a tree with no error nodes beyond those
/// the original parse already had outside the unit.
pub fn check_completeness(tree: &SyntaxTree, unit: &SemanticUnit, mask_token: &str) -> bool {
    let mut ops = 0;
    completeness_counted(
        &mut Segmenter::new(),
        tree,
        &unit.byte_span,
        unit.kind,
        mask_token,
        &mut ops,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FimOptions {
    pub range: GranularityRange,
    pub mask_token: String,
    pub seed: u64,
    /// Probability of keeping each eligible unit.
    pub sample_rate: f64,
}

impl FimOptions {
    pub fn new(range: GranularityRange, seed: u64) -> Self {
        Self {
            range,
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            seed,
            sample_rate: 1.0,
        }
    }
}

/// Samples cut from one file plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FimCut {
    pub samples: Vec<FimSample>,
    pub units: usize,
    pub eligible: usize,
    /// Traversal steps taken, excluding the parser's own work.
    pub ops: usize,
    pub ast_nodes: usize,
}

fn path_hash(path: &str) -> u64 {
    path.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn cut_fim_samples_with(
    seg: &mut Segmenter,
    file: &RawFile,
    opts: &FimOptions,
) -> Result<FimCut, SegmentError> {
    if let Some(e) = opts.range.validate().into_iter().next() {
        return Err(SegmentError::InvalidRange(e));
    }
    let tree = seg.parse(file)?;
    let mut ops = 0;
    let units = extract_counted(&tree, &mut ops);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ path_hash(&file.path));
    let (lo, hi) = (opts.range.theta_min, opts.range.theta_max);

    let mut samples = Vec::new();
    let mut eligible = 0;
    for unit in &units {
        ops += 1;
        let theta = rng.random_range(lo..=hi);
        let keep = rng.random::<f64>() < opts.sample_rate;
        let size = unit.size(opts.range.unit);
        if size < lo || size > theta {
            continue;
        }
        if !completeness_counted(
            seg,
            &tree,
            &unit.byte_span,
            unit.kind,
            &opts.mask_token,
            &mut ops,
        ) {
            continue;
        }
        eligible += 1;
        if keep {
            samples.push(FimSample::from_span(
                tree.source(),
                unit.byte_span.clone(),
                &opts.mask_token,
                &file.path,
                Some((&unit.id, unit.kind)),
            ));
        }
    }
    if eligible == 0 {
        return Err(SegmentError::NoEligibleUnits {
            path: file.path.clone(),
        });
    }
    Ok(FimCut {
        samples,
        units: units.len(),
        eligible,
        ops,
        ast_nodes: tree.node_count(),
    })
}

/// Structure-aligned FIM samples for every eligible unit, in document order.
pub fn cut_fim_samples(
    file: &RawFile,
    range: GranularityRange,
    mask_token: &str,
    rng_seed: u64,
) -> Result<Vec<FimSample>, SegmentError> {
    let opts = FimOptions {
        mask_token: mask_token.to_string(),
        ..FimOptions::new(range, rng_seed)
    };
    cut_fim_samples_with(&mut Segmenter::new(), file, &opts).map(|c| c.samples)
}

/// One line of `fim_samples.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FimRecord {
    pub input: String,
    pub target: String,
    pub source_file: String,
    pub unit_kind: String,
    pub unit_span: [usize; 2],
}

impl From<&FimSample> for FimRecord {
    fn from(s: &FimSample) -> Self {
        let span = s.span();
        Self {
            input: s.input(),
            target: s.target.clone(),
            source_file: s.source_file.clone(),
            unit_kind: s
                .unit_kind
                .map_or("GreedyWindow", |k| k.as_str())
                .to_string(),
            unit_span: [span.start, span.end],
        }
    }
}

/// FIM cuts over a whole corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusCut {
    /// Samples in file order, then document order.
    pub samples: Vec<FimSample>,
    pub files_cut: usize,
    /// Parsed files without any eligible unit.
    pub files_without_units: usize,
    /// Files skipped as unsupported or unparseable.
    pub files_skipped: usize,
}

/// Runs [`cut_fim_samples_with`] over every C/C++ file with one parser per
/// worker. Other languages are skipped.
pub fn cut_corpus(files: &[RawFile], opts: &FimOptions) -> Result<CorpusCut, SegmentError> {
    if let Some(e) = opts.range.validate().into_iter().next() {
        return Err(SegmentError::InvalidRange(e));
    }
    let results: Vec<Result<FimCut, SegmentError>> = files
        .par_iter()
        .map_init(Segmenter::new, |seg, f| cut_fim_samples_with(seg, f, opts))
        .collect();
    let mut out = CorpusCut::default();
    for r in results {
        match r {
            Ok(cut) => {
                out.files_cut += 1;
                out.samples.extend(cut.samples);
            }
            Err(SegmentError::NoEligibleUnits { .. }) => out.files_without_units += 1,
            Err(_) => out.files_skipped += 1,
        }
    }
    Ok(out)
}
