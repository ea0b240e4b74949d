use std::ops::Range;

use tree_sitter::{InputEdit, Node, Parser, Point, Tree};

use super::SegmentError;
use crate::pipeline::{Language, RawFile};

/// Concrete syntax tree of one file together with its source.
pub struct SyntaxTree {
    pub(crate) tree: Tree,
    pub(crate) source: String,
    pub(crate) path: String,
    pub(crate) language: Language,
    line_starts: Vec<usize>,
    node_count: usize,
    error_count: usize,
}

impl std::fmt::Debug for SyntaxTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SyntaxTree")
            .field("path", &self.path)
            .field("language", &self.language)
            .field("node_count", &self.node_count)
            .field("error_count", &self.error_count)
            .finish()
    }
}

impl SyntaxTree {
    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn language(&self) -> Language {
        self.language
    }

    /// Every node, named or anonymous, including the root.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.node_count.saturating_sub(1)
    }

    /// ERROR and MISSING nodes.
    pub fn error_count(&self) -> usize {
        self.error_count
    }

    pub fn has_errors(&self) -> bool {
        self.error_count > 0
    }

    pub(crate) fn point_at(&self, byte: usize) -> Point {
        let row = self.line_starts.partition_point(|&s| s <= byte) - 1;
        Point {
            row,
            column: byte - self.line_starts[row],
        }
    }

    /// Edit descriptor for replacing `span` with `replacement`.
    pub(crate) fn splice_edit(&self, span: &Range<usize>, replacement: &str) -> InputEdit {
        let start_position = self.point_at(span.start);
        let new_end_position = match replacement.rfind('\n') {
            None => Point {
                row: start_position.row,
                column: start_position.column + replacement.len(),
            },
            Some(last) => Point {
                row: start_position.row + replacement.matches('\n').count(),
                column: replacement.len() - last - 1,
            },
        };
        InputEdit {
            start_byte: span.start,
            old_end_byte: span.end,
            new_end_byte: span.start + replacement.len(),
            start_position,
            old_end_position: self.point_at(span.end),
            new_end_position,
        }
    }
}

fn is_error_node(n: &Node<'_>) -> bool {
    n.is_error() || n.is_missing()
}

/// Counts ERROR/MISSING nodes, descending only into subtrees flagged with
/// errors. Nodes lying entirely inside `exclude` are skipped. Every visited
/// node increments `ops`.
pub(crate) fn count_errors(
    root: Node<'_>,
    exclude: Option<&Range<usize>>,
    ops: &mut usize,
) -> usize {
    if !root.has_error() {
        return 0;
    }
    let mut count = 0;
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        *ops += 1;
        if let Some(ex) = exclude {
            if node.start_byte() >= ex.start && node.end_byte() <= ex.end && ex.start < ex.end {
                continue;
            }
        }
        if is_error_node(&node) {
            count += 1;
        }
        let mut cursor = node.walk();
        for child in node.children(&mut cursor) {
            if child.has_error() {
                stack.push(child);
            }
        }
    }
    count
}

/// Owns one parser per supported grammar. Not shareable across threads;
/// create one per worker.
pub struct Segmenter {
    c: Parser,
    cpp: Parser,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new()
    }
}

impl Segmenter {
    pub fn new() -> Self {
        let mut c = Parser::new();
        c.set_language(&tree_sitter_c::LANGUAGE.into())
            .expect("bundled C grammar is ABI compatible");
        let mut cpp = Parser::new();
        cpp.set_language(&tree_sitter_cpp::LANGUAGE.into())
            .expect("bundled C++ grammar is ABI compatible");
        Self { c, cpp }
    }

    pub(crate) fn parser_for(&mut self, language: Language) -> Option<&mut Parser> {
        match language {
            Language::C => Some(&mut self.c),
            Language::Cpp => Some(&mut self.cpp),
            Language::Other => None,
        }
    }

    pub fn parse(&mut self, file: &RawFile) -> Result<SyntaxTree, SegmentError> {
        let parser =
            self.parser_for(file.language)
                .ok_or_else(|| SegmentError::UnsupportedLanguage {
                    path: file.path.clone(),
                    language: file.language,
                })?;
        let tree = parser
            .parse(&file.content, None)
            .ok_or_else(|| SegmentError::ParserFailed {
                path: file.path.clone(),
            })?;

        let mut node_count = 0;
        let mut error_count = 0;
        {
            let mut cursor = tree.walk();
            'walk: loop {
                node_count += 1;
                if is_error_node(&cursor.node()) {
                    error_count += 1;
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
        }

        let mut line_starts = vec![0];
        line_starts.extend(
            file.content
                .bytes()
                .enumerate()
                .filter(|(_, b)| *b == b'\n')
                .map(|(i, _)| i + 1),
        );

        Ok(SyntaxTree {
            tree,
            source: file.content.clone(),
            path: file.path.clone(),
            language: file.language,
            line_starts,
            node_count,
            error_count,
        })
    }

    /// Re-parses `tree`'s source with `span` replaced by `replacement`,
    /// reusing the old tree for unchanged regions and never materializing the
    /// spliced text.
    pub(crate) fn reparse_spliced(
        &mut self,
        tree: &SyntaxTree,
        span: &Range<usize>,
        replacement: &str,
    ) -> Option<Tree> {
        let mut edited = tree.tree.clone();
        edited.edit(&tree.splice_edit(span, replacement));
        let src = tree.source.as_bytes();
        let rep = replacement.as_bytes();
        let (start, end) = (span.start, span.end);
        let shift_end = start + rep.len();
        let parser = self.parser_for(tree.language)?;
        parser.parse_with_options(
            &mut |i: usize, _: Point| -> &[u8] {
                if i < start {
                    &src[i..start]
                } else if i < shift_end {
                    &rep[i - start..]
                } else {
                    let j = i - shift_end + end;
                    if j < src.len() {
                        &src[j..]
                    } else {
                        &[]
                    }
                }
            },
            Some(&edited),
            None,
        )
    }
}

/// Parses a cleaned C or C++ file.
pub fn parse_to_ast(file: &RawFile) -> Result<SyntaxTree, SegmentError> {
    Segmenter::new().parse(file)
}
