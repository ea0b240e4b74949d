use tree_sitter::Node;

use super::tree::{Segmenter, SyntaxTree};
use super::{SemanticUnit, UnitId, UnitKind};
use crate::pipeline::RawFile;
use crate::tokenize::{count_starts_in, token_starts};

fn classify(node: &Node<'_>) -> Option<UnitKind> {
    match node.kind() {
        "function_definition" => {
            // A function template is reported once, on the wrapping node.
            let templated = node
                .parent()
                .is_some_and(|p| p.kind() == "template_declaration");
            (!templated).then_some(UnitKind::FunctionDef)
        }
        "template_declaration" => {
            let mut cursor = node.walk();
            let wraps_function = node
                .named_children(&mut cursor)
                .any(|c| c.kind() == "function_definition");
            wraps_function.then_some(UnitKind::FunctionDef)
        }
        "struct_specifier" | "union_specifier" => node
            .child_by_field_name("body")
            .map(|_| UnitKind::RecordTypeDef),
        "class_specifier" => node.child_by_field_name("body").map(|_| UnitKind::ClassDef),
        "if_statement" | "switch_statement" => Some(UnitKind::ConditionalBranch),
        "for_statement" | "for_range_loop" | "while_statement" | "do_statement" => {
            Some(UnitKind::LoopBody)
        }
        "preproc_def" | "preproc_function_def" => Some(UnitKind::MacroDef),
        _ => None,
    }
}

fn text<'a>(node: Node<'_>, src: &'a str) -> &'a str {
    &src[node.byte_range()]
}

/// Identifier at the bottom of a declarator chain.
pub(crate) fn declarator_name<'a>(mut node: Node<'_>, src: &'a str) -> Option<&'a str> {
    loop {
        match node.kind() {
            "identifier"
            | "field_identifier"
            | "type_identifier"
            | "qualified_identifier"
            | "destructor_name"
            | "operator_name"
            | "primitive_type" => {
                return Some(text(node, src));
            }
            "template_function" | "template_type" => {
                return node.child_by_field_name("name").map(|n| text(n, src));
            }
            _ => {
                node = match node.child_by_field_name("declarator") {
                    Some(d) => d,
                    None => node.named_child(0)?,
                };
            }
        }
    }
}

fn unit_names(node: Node<'_>, kind: UnitKind, src: &str) -> (Option<String>, Vec<String>) {
    match kind {
        UnitKind::FunctionDef => {
            let func = if node.kind() == "template_declaration" {
                let mut cursor = node.walk();
                let found = node
                    .named_children(&mut cursor)
                    .find(|c| c.kind() == "function_definition");
                match found {
                    Some(f) => f,
                    None => return (None, Vec::new()),
                }
            } else {
                node
            };
            let name = func
                .child_by_field_name("declarator")
                .and_then(|d| declarator_name(d, src))
                .map(str::to_string);
            (name, Vec::new())
        }
        UnitKind::RecordTypeDef | UnitKind::ClassDef => {
            let own = node
                .child_by_field_name("name")
                .map(|n| text(n, src).to_string());
            let mut aliases = Vec::new();
            if let Some(parent) = node.parent().filter(|p| p.kind() == "type_definition") {
                let mut cursor = parent.walk();
                for d in parent.children_by_field_name("declarator", &mut cursor) {
                    if let Some(n) = declarator_name(d, src) {
                        aliases.push(n.to_string());
                    }
                }
            }
            match own {
                Some(n) => (Some(n), aliases),
                None if !aliases.is_empty() => {
                    let first = aliases.remove(0);
                    (Some(first), aliases)
                }
                None => (None, aliases),
            }
        }
        UnitKind::MacroDef => (
            node.child_by_field_name("name")
                .map(|n| text(n, src).to_string()),
            Vec::new(),
        ),
        UnitKind::ConditionalBranch | UnitKind::LoopBody => (None, Vec::new()),
    }
}

/// Depth-first walk that records every candidate subtree together with its
/// node count. `ops` receives one tick per visited node.
pub(crate) fn extract_counted(tree: &SyntaxTree, ops: &mut usize) -> Vec<SemanticUnit> {
    let src = tree.source();
    let starts = token_starts(src);
    let mut units: Vec<SemanticUnit> = Vec::new();
    // (index of the unit opened at this node, preorder index on entry)
    let mut open: Vec<(Option<usize>, usize)> = Vec::new();
    let mut visited = 0usize;
    let mut cursor = tree.root().walk();

    'walk: loop {
        let node = cursor.node();
        *ops += 1;
        let pending = match classify(&node) {
            Some(kind) if !node.has_error() && node.end_byte() > node.start_byte() => {
                let span = node.byte_range();
                let (name, aliases) = unit_names(node, kind, src);
                units.push(SemanticUnit {
                    id: UnitId::new(tree.path(), &span),
                    kind,
                    file: tree.path().to_string(),
                    token_count: count_starts_in(&starts, span.start, span.end),
                    byte_span: span,
                    name,
                    aliases,
                    syntax: node.kind().to_string(),
                    node_count: 0,
                });
                Some(units.len() - 1)
            }
            _ => None,
        };
        open.push((pending, visited));
        visited += 1;

        if cursor.goto_first_child() {
            continue;
        }
        loop {
            let (pending, entered) = open.pop().expect("walk stack tracks cursor depth");
            if let Some(i) = pending {
                units[i].node_count = visited - entered;
            }
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                break 'walk;
            }
        }
    }
    units
}

/// Semantically closed subtrees of `tree` in document order. Units nest;
/// subtrees containing parse errors are skipped while their clean
/// descendants are still reported.
pub fn extract_semantic_units(tree: &SyntaxTree) -> Vec<SemanticUnit> {
    let mut ops = 0;
    extract_counted(tree, &mut ops)
}

fn top_level_kinds(root: Node<'_>) -> Vec<&'static str> {
    let mut cursor = root.walk();
    root.named_children(&mut cursor)
        .filter(|c| c.kind() != "comment")
        .map(|c| c.kind())
        .collect()
}

/// Whether the unit's text, parsed on its own in a minimal context, yields a
/// single error-free construct of the same syntax kind.
pub fn reparses_as_closed(tree: &SyntaxTree, unit: &SemanticUnit) -> bool {
    let Some(body) = tree.source().get(unit.byte_span.clone()) else {
        return false;
    };
    let (wrapped, prefix) = match unit.kind {
        UnitKind::FunctionDef | UnitKind::MacroDef => (body.to_string(), None),
        UnitKind::RecordTypeDef | UnitKind::ClassDef => (format!("{body};"), None),
        UnitKind::ConditionalBranch | UnitKind::LoopBody => (
            format!("void __forge_wrap(void) {{\n{body}\n}}\n"),
            Some(()),
        ),
    };
    let mut seg = Segmenter::new();
    let Ok(parsed) = seg.parse(&RawFile {
        path: unit.file.clone(),
        content: wrapped,
        language: tree.language(),
        lossy: false,
    }) else {
        return false;
    };
    if parsed.has_errors() {
        return false;
    }
    let root = parsed.root();
    let top = top_level_kinds(root);
    if top.len() != 1 {
        return false;
    }
    let inner = if prefix.is_some() {
        let Some(body) = root
            .named_child(0)
            .and_then(|f| f.child_by_field_name("body"))
        else {
            return false;
        };
        let mut cursor = body.walk();
        let kids: Vec<_> = body
            .named_children(&mut cursor)
            .filter(|c| c.kind() != "comment")
            .collect();
        if kids.len() != 1 {
            return false;
        }
        kids[0]
    } else {
        let first = root.named_child(0).expect("one top-level node");
        let mut cursor = first.walk();
        let found = if first.kind() == unit.syntax {
            Some(first)
        } else {
            // Record and class specifiers sit inside a declaration.
            first
                .named_children(&mut cursor)
                .find(|c| c.kind() == unit.syntax)
        };
        match found {
            Some(n) => n,
            None => return false,
        }
    };
    inner.kind() == unit.syntax && inner.end_byte() - inner.start_byte() == body.len()
}
