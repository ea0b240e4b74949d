use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::build::build_graph_from_files;
use super::paths::enumerate_paths;
use super::{CodeGraph, GraphError, GraphPath, PathStrategy};
use crate::pipeline::RawFile;
use crate::segment::UnitId;
use crate::tokenize::token_count;

/// File contents keyed by repository-relative path.
#[derive(Debug, Clone, Default)]
pub struct Sources<'a>(HashMap<&'a str, &'a str>);

impl<'a> Sources<'a> {
    pub fn from_files(files: &'a [RawFile]) -> Self {
        Sources(
            files
                .iter()
                .map(|f| (f.path.as_str(), f.content.as_str()))
                .collect(),
        )
    }

    pub fn insert(&mut self, path: &'a str, content: &'a str) {
        self.0.insert(path, content);
    }

    pub fn get(&self, path: &str) -> Option<&'a str> {
        self.0.get(path).copied()
    }
}

/// The cross-file marker placed on its own line before a segment.
pub fn annotation_line(path: &str) -> String {
    format!("/* file: {path} */")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSample {
    pub text: String,
    /// The path as enumerated, after any truncation.
    pub path: GraphPath,
    /// Unit ids and files in rendered order.
    pub unit_ids: Vec<UnitId>,
    pub files: Vec<String>,
    pub token_count: usize,
}

impl PathSample {
    pub fn depth(&self) -> usize {
        self.path.depth()
    }
}

fn render_order(
    graph: &CodeGraph,
    order: &[usize],
    sources: &Sources<'_>,
) -> Result<String, GraphError> {
    let nodes = graph.nodes();
    let first_file = order.first().map(|&v| nodes[v].file.as_str());
    let multi_file = order
        .iter()
        .any(|&v| Some(nodes[v].file.as_str()) != first_file);
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for &v in order {
        let node = &nodes[v];
        let code = sources
            .get(&node.file)
            .and_then(|src| src.get(node.span.clone()))
            .ok_or_else(|| GraphError::MissingSource(node.file.clone()))?;
        if prev.is_some() {
            if !out.ends_with('\n') {
                out.push('\n');
            }
            out.push('\n');
        }
        let crosses = match prev {
            None => multi_file,
            Some(p) => p != node.file,
        };
        if crosses {
            out.push_str(&annotation_line(&node.file));
            out.push('\n');
        }
        out.push_str(code);
        prev = Some(&node.file);
    }
    Ok(out)
}

/// Concatenates the path's units separated by one blank line. In a path that
/// touches more than one file, every segment whose file differs from the
/// previous segment's, and the first segment, is preceded by its
/// `/* file: ... */` line.
pub fn render_sample(
    graph: &CodeGraph,
    path: &GraphPath,
    sources: &Sources<'_>,
    dependency_first: bool,
) -> Result<PathSample, GraphError> {
    let mut order = path.nodes.clone();
    if dependency_first {
        order.reverse();
    }
    let text = render_order(graph, &order, sources)?;
    Ok(PathSample {
        token_count: token_count(&text),
        unit_ids: order.iter().map(|&v| graph.nodes()[v].id.clone()).collect(),
        files: order
            .iter()
            .map(|&v| graph.nodes()[v].file.clone())
            .collect(),
        path: path.clone(),
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsrOptions {
    pub depth: usize,
    pub breadth: usize,
    pub strategy: PathStrategy,
    pub max_tokens: Option<usize>,
    pub dependency_first: bool,
}

impl Default for SpsrOptions {
    fn default() -> Self {
        Self {
            depth: 1,
            breadth: 4,
            strategy: PathStrategy::ForwardCall,
            max_tokens: None,
            dependency_first: false,
        }
    }
}

impl SpsrOptions {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.breadth == 0 {
            errs.push("graph.breadth must be at least 1".to_string());
        }
        if self.max_tokens == Some(0) {
            errs.push("graph.max_tokens must be at least 1 when set".to_string());
        }
        errs
    }
}

#[derive(Debug, Clone)]
pub struct SpsrOutput {
    pub graph: CodeGraph,
    pub paths_enumerated: usize,
    pub samples: Vec<PathSample>,
}

fn render_bounded(
    graph: &CodeGraph,
    path: &GraphPath,
    sources: &Sources<'_>,
    opts: &SpsrOptions,
) -> Result<PathSample, GraphError> {
    let mut current = path.clone();
    loop {
        let sample = render_sample(graph, &current, sources, opts.dependency_first)?;
        match opts.max_tokens {
            Some(limit) if sample.token_count > limit && current.len() > 1 => {
                current.nodes.pop();
            }
            _ => return Ok(sample),
        }
    }
}

/// Graph construction, path enumeration, and rendering over a corpus. Paths
/// longer than `max_tokens` lose units from the tail; a unit is never split
/// and at least one unit always remains.
pub fn generate_spsr_corpus(
    files: &[RawFile],
    opts: &SpsrOptions,
) -> Result<SpsrOutput, GraphError> {
    if opts.breadth == 0 {
        return Err(GraphError::InvalidBreadth);
    }
    let graph = build_graph_from_files(files);
    let paths = enumerate_paths(&graph, opts.depth, opts.breadth, opts.strategy)?;
    let sources = Sources::from_files(files);
    let samples = paths
        .par_iter()
        .map(|p| render_bounded(&graph, p, &sources, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpsrOutput {
        paths_enumerated: paths.len(),
        graph,
        samples,
    })
}

/// One line of `spsr_samples.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpsrRecord {
    pub text: String,
    pub unit_ids: Vec<UnitId>,
    pub files: Vec<String>,
    pub depth: usize,
}

impl From<&PathSample> for SpsrRecord {
    fn from(s: &PathSample) -> Self {
        Self {
            text: s.text.clone(),
            unit_ids: s.unit_ids.clone(),
            files: s.files.clone(),
            depth: s.depth(),
        }
    }
}
