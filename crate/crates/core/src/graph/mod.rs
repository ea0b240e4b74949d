//! Typed dependency graph over top-level semantic units, bounded path
//! enumeration, and rendering of paths into concatenated training samples.

mod build;
mod paths;
mod render;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segment::{SemanticUnit, UnitId, UnitKind};

pub use build::{build_graph, build_graph_from_files, top_level_units};
pub use paths::{enumerate_paths, estimate_complexity, select_edges, ComplexityEstimate};
pub use render::{
    annotation_line, generate_spsr_corpus, render_sample, PathSample, Sources, SpsrOptions,
    SpsrOutput, SpsrRecord,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("breadth k must be at least 1")]
    InvalidBreadth,
    #[error("source for {0} is not available")]
    MissingSource(String),
    #[error("unknown path strategy {0:?}")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    DirectCall,
    MemberReference,
    TypeUsage,
    MacroExpansion,
    IncludeDependency,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [
        EdgeKind::DirectCall,
        EdgeKind::MemberReference,
        EdgeKind::TypeUsage,
        EdgeKind::MacroExpansion,
        EdgeKind::IncludeDependency,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::DirectCall => "DirectCall",
            EdgeKind::MemberReference => "MemberReference",
            EdgeKind::TypeUsage => "TypeUsage",
            EdgeKind::MacroExpansion => "MacroExpansion",
            EdgeKind::IncludeDependency => "IncludeDependency",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edge-kind ranking used when a node has more continuations than the
/// breadth cap allows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStrategy {
    #[default]
    ForwardCall,
    FieldAccess,
    HeaderInclusion,
}

impl PathStrategy {
    /// Edge kinds from most to least preferred.
    pub fn priority(&self) -> [EdgeKind; 5] {
        use EdgeKind::*;
        match self {
            PathStrategy::ForwardCall => [
                DirectCall,
                MacroExpansion,
                TypeUsage,
                MemberReference,
                IncludeDependency,
            ],
            PathStrategy::FieldAccess => [
                MemberReference,
                TypeUsage,
                DirectCall,
                MacroExpansion,
                IncludeDependency,
            ],
            PathStrategy::HeaderInclusion => [
                IncludeDependency,
                DirectCall,
                MacroExpansion,
                TypeUsage,
                MemberReference,
            ],
        }
    }

    pub fn rank(&self, kind: EdgeKind) -> usize {
        self.priority()
            .iter()
            .position(|k| *k == kind)
            .expect("priority lists every kind")
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PathStrategy::ForwardCall => "forward-call",
            PathStrategy::FieldAccess => "field-access",
            PathStrategy::HeaderInclusion => "header-inclusion",
        }
    }
}

impl FromStr for PathStrategy {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward-call" => Ok(PathStrategy::ForwardCall),
            "field-access" => Ok(PathStrategy::FieldAccess),
            "header-inclusion" => Ok(PathStrategy::HeaderInclusion),
            other => Err(GraphError::UnknownStrategy(other.to_string())),
        }
    }
}

impl fmt::Display for PathStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A graph node: one top-level unit and its attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: UnitId,
    pub kind: UnitKind,
    pub file: String,
    pub span: Range<usize>,
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    /// Directory of the defining file.
    pub module: String,
    pub syntax: String,
    pub token_count: usize,
}

impl GraphNode {
    pub fn from_unit(u: &SemanticUnit) -> Self {
        let module = u
            .file
            .rsplit_once('/')
            .map(|(d, _)| d.to_string())
            .unwrap_or_default();
        Self {
            id: u.id.clone(),
            kind: u.kind,
            file: u.file.clone(),
            span: u.byte_span.clone(),
            name: u.name.clone(),
            aliases: u.aliases.clone(),
            module,
            syntax: u.syntax.clone(),
            token_count: u.token_count,
        }
    }

    pub fn short_names(&self) -> impl Iterator<Item = &str> {
        self.name
            .iter()
            .chain(&self.aliases)
            .map(|n| n.rsplit("::").next().unwrap_or(n))
    }
}

/// Directed typed edge between node indices. `site` is the byte offset of
/// the reference in the source file of `from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub site: usize,
}

/// References that could not be linked to a node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDiagnostics {
    pub unresolved_calls: usize,
    pub unresolved_types: usize,
    pub unresolved_members: usize,
    pub unresolved_includes: usize,
    pub self_edges: usize,
    pub unparsed_files: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CodeGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    pub diagnostics: GraphDiagnostics,
}

impl CodeGraph {
    /// Builds a graph from explicit nodes and edges. Duplicate
    /// `(from, to, kind)` triples collapse to the lowest site.
    ///
    /// Panics if an edge endpoint is out of range.
    pub fn from_parts(nodes: Vec<GraphNode>, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        for e in &edges {
            assert!(
                e.from < nodes.len() && e.to < nodes.len(),
                "edge endpoint out of range"
            );
        }
        edges.sort_by_key(|e| (e.from, e.to, e.kind, e.site));
        edges.dedup_by_key(|e| (e.from, e.to, e.kind));
        let mut out = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
        }
        let self_edges = edges.iter().filter(|e| e.from == e.to).count();
        Self {
            nodes,
            edges,
            out,
            diagnostics: GraphDiagnostics {
                self_edges,
                ..GraphDiagnostics::default()
            },
        }
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.out[node].iter().map(|&i| &self.edges[i])
    }

    pub fn index_of(&self, id: &UnitId) -> Option<usize> {
        self.nodes.iter().position(|n| &n.id == id)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out_edges(from).any(|e| e.to == to)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeJson {
                    id: n.id.clone(),
                    kind: n.kind,
                    file: n.file.clone(),
                    span: [n.span.start, n.span.end],
                    name: n.name.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    from: self.nodes[e.from].id.clone(),
                    to: self.nodes[e.to].id.clone(),
                    kind: e.kind,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: UnitId,
    pub kind: UnitKind,
    pub file: String,
    pub span: [usize; 2],
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: UnitId,
    pub to: UnitId,
    pub kind: EdgeKind,
}

/// Serialized form written to `graph.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<EdgeJson>,
}

/// A node-simple directed path, as node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphPath {
    pub nodes: Vec<usize>,
}

impl GraphPath {
    pub fn depth(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
