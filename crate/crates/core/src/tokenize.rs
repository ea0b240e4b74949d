//! Lexical tokenizer shared by shingling, BLEU, and size accounting.
//!
//! A token is either a maximal run of identifier characters (alphanumeric or
//! `_`) or a single non-whitespace punctuation character. Whitespace separates
//! tokens and is never part of one.

/// A token with its byte offset in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub start: usize,
    pub text: &'a str,
}

impl Token<'_> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }
}

#[inline]
fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Iterator over the tokens of `text`.
pub struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Iterator for Tokens<'a> {
    type Item = Token<'a>;

    fn next(&mut self) -> Option<Token<'a>> {
        let rest = &self.text[self.pos..];
        let mut chars = rest.char_indices().skip_while(|(_, c)| c.is_whitespace());
        let (off, first) = chars.next()?;
        let start = self.pos + off;
        let mut end = start + first.len_utf8();
        if is_word(first) {
            for (i, c) in chars {
                if !is_word(c) {
                    break;
                }
                end = self.pos + i + c.len_utf8();
            }
        }
        self.pos = end;
        Some(Token {
            start,
            text: &self.text[start..end],
        })
    }
}

pub fn tokens(text: &str) -> Tokens<'_> {
    Tokens { text, pos: 0 }
}

pub fn token_count(text: &str) -> usize {
    tokens(text).count()
}

/// Start offsets of every token, for O(log n) span counting.
pub fn token_starts(text: &str) -> Vec<usize> {
    tokens(text).map(|t| t.start).collect()
}

/// Number of tokens whose start offset falls inside `[start, end)`.
pub fn count_starts_in(starts: &[usize], start: usize, end: usize) -> usize {
    let lo = starts.partition_point(|&s| s < start);
    let hi = starts.partition_point(|&s| s < end);
    hi - lo
}
