use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RawFile;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanOptions {
    /// Remove `//` and `/* */` comments. Line structure is kept.
    pub strip_comments: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CleanError {
    #[error("cannot tokenize {path}: {reason} at line {line}")]
    ParseFailure {
        path: String,
        line: usize,
        reason: &'static str,
    },
}

/// Normalizes line endings and whitespace, optionally stripping comments.
pub fn clean_file(file: &RawFile, opts: &CleanOptions) -> Result<RawFile, CleanError> {
    let mut text = normalize_line_endings(&file.content);
    if opts.strip_comments {
        text = strip_comments(&text).map_err(|(line, reason)| CleanError::ParseFailure {
            path: file.path.clone(),
            line,
            reason,
        })?;
    }
    let content = normalize_whitespace(&text);
    Ok(RawFile {
        content,
        ..file.clone()
    })
}

pub fn normalize_line_endings(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_string();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Strips trailing whitespace on every line and collapses runs of more than
/// two blank lines into one.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_blank = 0usize;
    let mut first = true;
    let flush = |out: &mut String, n: usize, first: &mut bool| {
        let keep = if n > 2 { 1 } else { n };
        for _ in 0..keep {
            if !*first {
                out.push('\n');
            }
            *first = false;
        }
    };
    for line in text.split('\n') {
        let line = line.trim_end();
        if line.is_empty() {
            pending_blank += 1;
            continue;
        }
        flush(&mut out, pending_blank, &mut first);
        pending_blank = 0;
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str(line);
    }
    flush(&mut out, pending_blank, &mut first);
    out
}

fn is_word(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80
}

/// The identifier-like run of bytes ending right before `end`.
fn word_before(bytes: &[u8], end: usize) -> &[u8] {
    let mut start = end;
    while start > 0 && is_word(bytes[start - 1]) {
        start -= 1;
    }
    &bytes[start..end]
}

/// Removes C/C++ comments with a small lexer that understands string, char,
/// and raw-string literals. Block comments keep their newlines so that no
/// code byte changes line; a single-line block comment between two
/// non-whitespace bytes becomes one space so tokens do not fuse.
///
/// Errors carry the 1-based line where the unterminated construct starts.
pub fn strip_comments(text: &str) -> Result<String, (usize, &'static str)> {
    let bytes = text.as_bytes();
    let mut out: Vec<u8> = Vec::with_capacity(bytes.len());
    let mut i = 0usize;
    let mut line = 1usize;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                i += 2;
                while i < bytes.len() && bytes[i] != b'\n' {
                    if bytes[i] == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
                        out.push(b'\n');
                        line += 1;
                        i += 2;
                        continue;
                    }
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                let start_line = line;
                let mut j = i + 2;
                let mut newlines = 0usize;
                loop {
                    if j + 1 >= bytes.len() {
                        return Err((start_line, "unterminated block comment"));
                    }
                    if bytes[j] == b'*' && bytes[j + 1] == b'/' {
                        break;
                    }
                    if bytes[j] == b'\n' {
                        newlines += 1;
                    }
                    j += 1;
                }
                let after = j + 2;
                if newlines == 0 {
                    let prev_solid = out.last().is_some_and(|c| !c.is_ascii_whitespace());
                    let next_solid = bytes.get(after).is_some_and(|c| !c.is_ascii_whitespace());
                    if prev_solid && next_solid {
                        out.push(b' ');
                    }
                } else {
                    out.extend(std::iter::repeat_n(b'\n', newlines));
                    line += newlines;
                }
                i = after;
            }
            b'"' => {
                let prefix = word_before(bytes, i);
                if matches!(prefix, b"R" | b"LR" | b"uR" | b"UR" | b"u8R") {
                    i = copy_raw_string(bytes, i, &mut out, &mut line)?;
                } else {
                    i = copy_quoted(
                        bytes,
                        i,
                        b'"',
                        &mut out,
                        &mut line,
                        "unterminated string literal",
                    )?;
                }
            }
            b'\'' => {
                let prefix = word_before(bytes, i);
                let digit_separator = prefix.first().is_some_and(|c| c.is_ascii_digit());
                if digit_separator {
                    out.push(b);
                    i += 1;
                } else {
                    i = copy_quoted(
                        bytes,
                        i,
                        b'\'',
                        &mut out,
                        &mut line,
                        "unterminated character literal",
                    )?;
                }
            }
            _ => {
                if b == b'\n' {
                    line += 1;
                }
                out.push(b);
                i += 1;
            }
        }
    }
    // Only ASCII-delimited regions were removed, so UTF-8 boundaries hold.
    Ok(String::from_utf8(out).expect("comment removal preserves UTF-8"))
}

fn copy_quoted(
    bytes: &[u8],
    open: usize,
    quote: u8,
    out: &mut Vec<u8>,
    line: &mut usize,
    reason: &'static str,
) -> Result<usize, (usize, &'static str)> {
    let start_line = *line;
    out.push(quote);
    let mut i = open + 1;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'\\' => {
                out.push(b);
                if let Some(&next) = bytes.get(i + 1) {
                    if next == b'\n' {
                        *line += 1;
                    }
                    out.push(next);
                }
                i += 2;
            }
            b'\n' => return Err((start_line, reason)),
            _ if b == quote => {
                out.push(b);
                return Ok(i + 1);
            }
            _ => {
                out.push(b);
                i += 1;
            }
        }
    }
    Err((start_line, reason))
}

fn copy_raw_string(
    bytes: &[u8],
    open: usize,
    out: &mut Vec<u8>,
    line: &mut usize,
) -> Result<usize, (usize, &'static str)> {
    const REASON: &str = "unterminated raw string literal";
    let start_line = *line;
    let mut i = open + 1;
    let delim_start = i;
    while i < bytes.len() && bytes[i] != b'(' {
        if matches!(bytes[i], b' ' | b')' | b'\\' | b'\n' | b'\t') || i - delim_start > 16 {
            return Err((start_line, "malformed raw string delimiter"));
        }
        i += 1;
    }
    if i >= bytes.len() {
        return Err((start_line, REASON));
    }
    let delim = &bytes[delim_start..i];
    let mut closing = Vec::with_capacity(delim.len() + 2);
    closing.push(b')');
    closing.extend_from_slice(delim);
    closing.push(b'"');
    let body_start = i + 1;
    let rel = bytes[body_start..]
        .windows(closing.len())
        .position(|w| w == closing.as_slice())
        .ok_or((start_line, REASON))?;
    let end = body_start + rel + closing.len();
    let chunk = &bytes[open..end];
    *line += chunk.iter().filter(|&&c| c == b'\n').count();
    out.extend_from_slice(chunk);
    Ok(end)
}
