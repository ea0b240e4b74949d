use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use tree_sitter::Node;

use super::{CodeGraph, Edge, EdgeKind, GraphDiagnostics, GraphNode};
use crate::pipeline::RawFile;
use crate::segment::{declarator_name, extract_semantic_units, Segmenter, SemanticUnit, UnitKind};

/// Declaration-level units not nested inside another declaration-level unit,
/// sorted by file then offset.
pub fn top_level_units(units: &[SemanticUnit]) -> Vec<&SemanticUnit> {
    let mut decls: Vec<&SemanticUnit> = units.iter().filter(|u| u.kind.is_declaration()).collect();
    decls.sort_by(|a, b| {
        (
            a.file.as_str(),
            a.byte_span.start,
            std::cmp::Reverse(a.byte_span.end),
        )
            .cmp(&(
                b.file.as_str(),
                b.byte_span.start,
                std::cmp::Reverse(b.byte_span.end),
            ))
    });
    let mut out: Vec<&SemanticUnit> = Vec::new();
    for u in decls {
        let nested = out.last().is_some_and(|p| {
            p.file == u.file
                && p.byte_span.start <= u.byte_span.start
                && u.byte_span.end <= p.byte_span.end
        });
        if !nested {
            out.push(u);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RefKind {
    Call,
    Macro,
    Type,
}

#[derive(Debug, Default)]
struct FileRefs {
    parsed: bool,
    /// (spelled path, angle-bracket form, site)
    includes: Vec<(String, bool, usize)>,
    /// (node index, kind, short name, site)
    refs: Vec<(usize, RefKind, String, usize)>,
    /// (node index, variable, site); `None` when the accessed object is not a
    /// plain identifier.
    members: Vec<(usize, Option<String>, usize)>,
    /// per node: variable -> short type name
    decls: HashMap<usize, HashMap<String, String>>,
}

fn text<'a>(n: Node<'_>, src: &'a str) -> &'a str {
    &src[n.byte_range()]
}

fn short(name: &str) -> &str {
    name.rsplit("::").next().unwrap_or(name)
}

fn callee_name<'a>(callee: Node<'_>, src: &'a str) -> Option<&'a str> {
    match callee.kind() {
        "identifier" | "qualified_identifier" => Some(short(text(callee, src))),
        "field_expression" => callee
            .child_by_field_name("field")
            .map(|f| short(text(f, src))),
        "template_function" => callee
            .child_by_field_name("name")
            .map(|f| short(text(f, src))),
        "parenthesized_expression" => callee.named_child(0).and_then(|c| callee_name(c, src)),
        _ => None,
    }
}

fn type_name<'a>(ty: Node<'_>, src: &'a str) -> Option<&'a str> {
    match ty.kind() {
        "type_identifier" | "qualified_identifier" => Some(short(text(ty, src))),
        "struct_specifier" | "union_specifier" | "class_specifier" => {
            ty.child_by_field_name("name").map(|n| short(text(n, src)))
        }
        "template_type" => ty.child_by_field_name("name").map(|n| short(text(n, src))),
        _ => None,
    }
}

fn is_defining_type_identifier(node: Node<'_>) -> bool {
    let Some(parent) = node.parent() else {
        return false;
    };
    match parent.kind() {
        "struct_specifier" | "union_specifier" | "class_specifier" | "enum_specifier" => {
            parent.child_by_field_name("body").is_some()
                && parent
                    .child_by_field_name("name")
                    .is_some_and(|n| n.id() == node.id())
        }
        "type_parameter_declaration"
        | "optional_type_parameter_declaration"
        | "variadic_type_parameter_declaration" => true,
        _ => {
            let mut p = Some(parent);
            while let Some(q) = p {
                if q.kind() == "type_definition" {
                    return true;
                }
                if !q.kind().ends_with("_declarator") {
                    return false;
                }
                p = q.parent();
            }
            false
        }
    }
}

struct NameIndex<'a> {
    functions: HashMap<&'a str, Vec<usize>>,
    types: HashMap<&'a str, Vec<usize>>,
    macros: HashMap<&'a str, Vec<usize>>,
}

impl<'a> NameIndex<'a> {
    fn new(nodes: &'a [GraphNode]) -> Self {
        let mut idx = NameIndex {
            functions: HashMap::new(),
            types: HashMap::new(),
            macros: HashMap::new(),
        };
        for (i, n) in nodes.iter().enumerate() {
            let map = match n.kind {
                UnitKind::FunctionDef => &mut idx.functions,
                UnitKind::RecordTypeDef | UnitKind::ClassDef => &mut idx.types,
                UnitKind::MacroDef => &mut idx.macros,
                UnitKind::ConditionalBranch | UnitKind::LoopBody => continue,
            };
            for name in n.short_names() {
                let slot = map.entry(name).or_default();
                if slot.last() != Some(&i) {
                    slot.push(i);
                }
            }
        }
        idx
    }
}

fn enclosing(spans: &[(usize, usize, usize)], pos: usize) -> Option<usize> {
    let i = spans.partition_point(|&(start, _, _)| start <= pos);
    let &(start, end, node) = spans.get(i.checked_sub(1)?)?;
    (start <= pos && pos < end).then_some(node)
}

fn collect_refs(
    seg: &mut Segmenter,
    file: &RawFile,
    spans: &[(usize, usize, usize)],
    names: &NameIndex<'_>,
) -> FileRefs {
    let Ok(tree) = seg.parse(file) else {
        return FileRefs::default();
    };
    let src = tree.source();
    let mut refs = FileRefs {
        parsed: true,
        ..FileRefs::default()
    };
    let mut cursor = tree.root().walk();
    'walk: loop {
        let node = cursor.node();
        let site = node.start_byte();
        if node.kind() == "preproc_include" {
            if let Some(path) = node.child_by_field_name("path") {
                let raw = text(path, src);
                let system = path.kind() == "system_lib_string";
                let spelled = raw.trim_matches(|c| c == '"' || c == '<' || c == '>');
                refs.includes.push((spelled.to_string(), system, site));
            }
        } else if let Some(owner) = enclosing(spans, site) {
            match node.kind() {
                "call_expression" => {
                    if let Some(name) = node
                        .child_by_field_name("function")
                        .and_then(|f| callee_name(f, src))
                    {
                        refs.refs
                            .push((owner, RefKind::Call, name.to_string(), site));
                    }
                }
                "identifier" => {
                    let name = text(node, src);
                    let defining = node.parent().is_some_and(|p| {
                        p.kind().starts_with("preproc_")
                            && p.child_by_field_name("name")
                                .is_some_and(|n| n.id() == node.id())
                    });
                    if !defining && names.macros.contains_key(name) {
                        refs.refs
                            .push((owner, RefKind::Macro, name.to_string(), site));
                    }
                }
                "type_identifier" => {
                    if !is_defining_type_identifier(node) {
                        refs.refs
                            .push((owner, RefKind::Type, text(node, src).to_string(), site));
                    }
                }
                "field_expression" => {
                    let var = node
                        .child_by_field_name("argument")
                        .filter(|a| a.kind() == "identifier")
                        .map(|a| text(a, src).to_string());
                    refs.members.push((owner, var, site));
                }
                "parameter_declaration"
                | "optional_parameter_declaration"
                | "declaration"
                | "field_declaration" => {
                    if let Some(ty) = node
                        .child_by_field_name("type")
                        .and_then(|t| type_name(t, src))
                    {
                        let mut c = node.walk();
                        for d in node.children_by_field_name("declarator", &mut c) {
                            if let Some(var) = declarator_name(d, src) {
                                refs.decls
                                    .entry(owner)
                                    .or_default()
                                    .insert(var.to_string(), ty.to_string());
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        if cursor.goto_first_child() {
            continue;
        }
        while !cursor.goto_next_sibling() {
            if !cursor.goto_parent() {
                break 'walk;
            }
        }
    }
    refs
}

fn normalize(path: &str) -> Option<String> {
    let mut parts: Vec<&str> = Vec::new();
    for seg in path.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    Some(parts.join("/"))
}

/// Including file's directory, then the repository root, then a unique
/// path-suffix match.
fn resolve_include(
    from: &str,
    spelled: &str,
    system: bool,
    paths: &BTreeSet<&str>,
) -> Option<String> {
    if !system {
        let dir = from.rsplit_once('/').map_or("", |(d, _)| d);
        if let Some(p) = normalize(&format!("{dir}/{spelled}")) {
            if paths.contains(p.as_str()) {
                return Some(p);
            }
        }
    }
    if let Some(p) = normalize(spelled) {
        if paths.contains(p.as_str()) {
            return Some(p);
        }
        let suffix = format!("/{p}");
        let mut hits = paths.iter().filter(|c| c.ends_with(&suffix));
        if let (Some(only), None) = (hits.next(), hits.next()) {
            return Some(only.to_string());
        }
    }
    None
}

/// Same-file candidates, else those reachable through includes, else all.
fn prefer(cands: &[usize], nodes: &[GraphNode], file: &str, closure: &HashSet<&str>) -> Vec<usize> {
    let same: Vec<usize> = cands
        .iter()
        .copied()
        .filter(|&c| nodes[c].file == file)
        .collect();
    if !same.is_empty() {
        return same;
    }
    let inc: Vec<usize> = cands
        .iter()
        .copied()
        .filter(|&c| closure.contains(nodes[c].file.as_str()))
        .collect();
    if !inc.is_empty() {
        return inc;
    }
    cands.to_vec()
}

/// Links top-level units through calls, member accesses, type uses, macro
/// uses, and includes. References are resolved by name.
pub fn build_graph(units: &[SemanticUnit], files: &[RawFile]) -> CodeGraph {
    let nodes: Vec<GraphNode> = top_level_units(units)
        .into_iter()
        .map(GraphNode::from_unit)
        .collect();
    let names = NameIndex::new(&nodes);

    let mut spans_by_file: HashMap<&str, Vec<(usize, usize, usize)>> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        spans_by_file
            .entry(n.file.as_str())
            .or_default()
            .push((n.span.start, n.span.end, i));
    }
    let mut order: Vec<&RawFile> = files.iter().collect();
    order.sort_by(|a, b| a.path.cmp(&b.path));
    order.dedup_by(|a, b| a.path == b.path);

    let empty = Vec::new();
    let collected: Vec<FileRefs> = order
        .par_iter()
        .map_init(Segmenter::new, |seg, f| {
            let spans = spans_by_file.get(f.path.as_str()).unwrap_or(&empty);
            collect_refs(seg, f, spans, &names)
        })
        .collect();

    let mut diag = GraphDiagnostics::default();
    let paths: BTreeSet<&str> = order.iter().map(|f| f.path.as_str()).collect();
    let mut includes: HashMap<&str, Vec<(String, usize)>> = HashMap::new();
    for (f, refs) in order.iter().zip(&collected) {
        if !refs.parsed {
            diag.unparsed_files += 1;
        }
        for (spelled, system, site) in &refs.includes {
            match resolve_include(&f.path, spelled, *system, &paths) {
                Some(target) => includes
                    .entry(f.path.as_str())
                    .or_default()
                    .push((target, *site)),
                None => diag.unresolved_includes += 1,
            }
        }
    }

    let closure_of = |start: &str| -> HashSet<&str> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut queue: VecDeque<&str> = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            for (t, _) in includes.get(f).into_iter().flatten() {
                if t != start && seen.insert(t.as_str()) {
                    queue.push_back(t.as_str());
                }
            }
        }
        seen
    };

    let mut edges: Vec<Edge> = Vec::new();
    for (f, refs) in order.iter().zip(&collected) {
        let closure = closure_of(&f.path);
        let own: &[(usize, usize, usize)] = spans_by_file.get(f.path.as_str()).unwrap_or(&empty);

        for (target, site) in includes.get(f.path.as_str()).into_iter().flatten() {
            let theirs = spans_by_file.get(target.as_str()).unwrap_or(&empty);
            for &(_, _, from) in own {
                for &(_, _, to) in theirs {
                    edges.push(Edge {
                        from,
                        to,
                        kind: EdgeKind::IncludeDependency,
                        site: *site,
                    });
                }
            }
        }

        for (owner, kind, name, site) in &refs.refs {
            let (cands, edge_kind) = match kind {
                RefKind::Call => (names.functions.get(name.as_str()), EdgeKind::DirectCall),
                RefKind::Macro => (names.macros.get(name.as_str()), EdgeKind::MacroExpansion),
                RefKind::Type => (names.types.get(name.as_str()), EdgeKind::TypeUsage),
            };
            match cands {
                Some(c) => {
                    for to in prefer(c, &nodes, &f.path, &closure) {
                        edges.push(Edge {
                            from: *owner,
                            to,
                            kind: edge_kind,
                            site: *site,
                        });
                    }
                }
                None => match kind {
                    RefKind::Call if !names.macros.contains_key(name.as_str()) => {
                        diag.unresolved_calls += 1
                    }
                    RefKind::Type => diag.unresolved_types += 1,
                    _ => {}
                },
            }
        }

        for (owner, var, site) in &refs.members {
            let targets = var
                .as_ref()
                .and_then(|v| refs.decls.get(owner)?.get(v))
                .and_then(|ty| names.types.get(ty.as_str()));
            match targets {
                Some(c) => {
                    for to in prefer(c, &nodes, &f.path, &closure) {
                        edges.push(Edge {
                            from: *owner,
                            to,
                            kind: EdgeKind::MemberReference,
                            site: *site,
                        });
                    }
                }
                None => diag.unresolved_members += 1,
            }
        }
    }

    let mut graph = CodeGraph::from_parts(nodes, edges);
    diag.self_edges = graph.diagnostics.self_edges;
    graph.diagnostics = diag;
    graph
}

/// Extracts units from every file and builds the graph over them.
pub fn build_graph_from_files(files: &[RawFile]) -> CodeGraph {
    let units: Vec<SemanticUnit> = files
        .par_iter()
        .map_init(Segmenter::new, |seg, f| {
            seg.parse(f)
                .map(|t| extract_semantic_units(&t))
                .unwrap_or_default()
        })
        .flatten()
        .collect();
    build_graph(&units, files)
}
