use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CodeGraph, Edge, GraphError, GraphPath, PathStrategy};

/// Continuations of `node`: self-loops are dropped, parallel edges to the
/// same target collapse to the best-ranked one, and the remainder is ordered
/// by strategy rank, reference site, then target index. At most `k` edges.
pub fn select_edges(graph: &CodeGraph, node: usize, k: usize, strategy: PathStrategy) -> Vec<Edge> {
    let key = |e: &Edge| (strategy.rank(e.kind), e.site, e.to);
    let mut best: HashMap<usize, Edge> = HashMap::new();
    for e in graph.out_edges(node).filter(|e| e.to != node) {
        best.entry(e.to)
            .and_modify(|cur| {
                if key(e) < key(cur) {
                    *cur = *e;
                }
            })
            .or_insert(*e);
    }
    let mut ranked: Vec<Edge> = best.into_values().collect();
    ranked.sort_by_key(key);
    ranked.truncate(k);
    ranked
}

/// All node-simple paths of at most `max_depth` edges, level by level.
///
/// Each node's continuations are cut to `k` by [`select_edges`] before
/// already-visited targets are skipped. Single nodes are the depth-0 paths.
pub fn enumerate_paths(
    graph: &CodeGraph,
    max_depth: usize,
    k: usize,
    strategy: PathStrategy,
) -> Result<Vec<GraphPath>, GraphError> {
    if k == 0 {
        return Err(GraphError::InvalidBreadth);
    }
    let n = graph.node_count();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            select_edges(graph, v, k, strategy)
                .into_iter()
                .map(|e| e.to)
                .collect()
        })
        .collect();

    let mut level: Vec<GraphPath> = (0..n).map(|v| GraphPath { nodes: vec![v] }).collect();
    let mut all = level.clone();
    for _ in 0..max_depth {
        let mut next = Vec::new();
        for p in &level {
            let last = *p.nodes.last().expect("paths are non-empty");
            for &t in &succ[last] {
                if !p.nodes.contains(&t) {
                    let mut nodes = p.nodes.clone();
                    nodes.push(t);
                    next.push(GraphPath { nodes });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub node_count: usize,
    pub avg_outdegree: f64,
    pub depth: usize,
    /// Mean number of units per enumerated path.
    pub mean_path_len: f64,
    /// `n + n*d + n * d^D * m`
    pub predicted_ops: f64,
}

impl ComplexityEstimate {
    pub fn from_terms(n: usize, d: f64, depth: usize, m: f64) -> Self {
        let nf = n as f64;
        Self {
            node_count: n,
            avg_outdegree: d,
            depth,
            mean_path_len: m,
            predicted_ops: nf + nf * d + nf * d.powi(depth as i32) * m,
        }
    }
}

/// Evaluates the enumeration cost bound with the graph's mean number of
/// distinct non-self successors as `d` and the mean length of `paths` as `m`.
pub fn estimate_complexity(
    graph: &CodeGraph,
    depth: usize,
    paths: &[GraphPath],
) -> ComplexityEstimate {
    let n = graph.node_count();
    if n == 0 {
        return ComplexityEstimate::from_terms(0, 0.0, depth, 0.0);
    }
    let mut successors = 0usize;
    for v in 0..n {
        let mut targets: Vec<usize> = graph
            .out_edges(v)
            .map(|e| e.to)
            .filter(|&t| t != v)
            .collect();
        targets.sort_unstable();
        targets.dedup();
        successors += targets.len();
    }
    let d = successors as f64 / n as f64;
    let m = if paths.is_empty() {
        0.0
    } else {
        paths.iter().map(|p| p.len()).sum::<usize>() as f64 / paths.len() as f64
    };
    ComplexityEstimate::from_terms(n, d, depth, m)
}
