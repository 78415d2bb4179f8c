//! Splitting a document into spans of roughly equal size.
//!
//! Blocks are separated by blank lines; a heading always starts a new span.
//! Consecutive blocks are packed greedily up to the target size, and blocks
//! larger than the target are cut at sentence ends, then between words.

use std::ops::Range;

use serde::Serialize;

pub const DEFAULT_TARGET_TOKENS: usize = 500;

/// Rough token count: whitespace-delimited words times 1.3, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    let words = text.split_whitespace().count();
    (words * 13).div_ceil(10)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub text: String,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanPlan {
    pub spans: Vec<Span>,
    pub target_span_tokens: usize,
}

impl SpanPlan {
    /// Concatenated span texts; equals the source document.
    pub fn joined(&self) -> String {
        self.spans.iter().map(|s| s.text.as_str()).collect()
    }
}

/// A Markdown `#` heading or a line that opens with bold text.
pub fn is_heading(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('#') || (t.starts_with("**") && t[2..].contains("**"))
}

/// The heading text of a span's first non-blank line, if it is a heading.
pub fn heading_of(text: &str) -> Option<String> {
    let line = text.lines().find(|l| !l.trim().is_empty())?;
    if !is_heading(line) {
        return None;
    }
    let t = line.trim().trim_start_matches('#').trim();
    let t = match t.strip_prefix("**").and_then(|r| r.split_once("**")) {
        Some((inner, _)) => inner,
        None => t,
    };
    Some(t.trim().trim_end_matches([':', '.']).trim().to_string())
}

struct Block {
    range: Range<usize>,
    heading: bool,
}

/// Blocks at blank lines and before headings. Blank lines stay with the
/// block they follow, so the blocks tile the document.
fn blocks(doc: &str) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    let mut pos = 0;
    let mut after_blank = true;
    for line in doc.split_inclusive('\n') {
        let start = pos;
        pos += line.len();
        if line.trim().is_empty() {
            after_blank = true;
            match out.last_mut() {
                Some(b) => b.range.end = pos,
                None => out.push(Block { range: start..pos, heading: false }),
            }
            continue;
        }
        let heading = is_heading(line);
        let continues = !after_blank && !heading;
        match out.last_mut() {
            Some(b) if continues || (b.range.start == 0 && doc[b.range.clone()].trim().is_empty()) => {
                b.range.end = pos;
                b.heading |= heading;
            }
            _ => out.push(Block { range: start..pos, heading }),
        }
        after_blank = false;
    }
    out
}

/// Cuts `range` after sentence ends, keeping the trailing whitespace with
/// the sentence.
fn sentences(doc: &str, range: Range<usize>) -> Vec<Range<usize>> {
    let text = &doc[range.clone()];
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|(_, n)| n.is_whitespace()) {
            let mut end = i + c.len_utf8();
            while let Some(&(j, n)) = chars.peek() {
                if !n.is_whitespace() {
                    break;
                }
                end = j + n.len_utf8();
                chars.next();
            }
            out.push(range.start + start..range.start + end);
            start = end;
        }
    }
    if start < text.len() {
        out.push(range.start + start..range.end);
    }
    out
}

/// Cuts `range` into pieces of at most `max_words` words, each keeping its
/// trailing whitespace.
fn word_chunks(doc: &str, range: Range<usize>, max_words: usize) -> Vec<Range<usize>> {
    let text = &doc[range.clone()];
    let mut out = Vec::new();
    let (mut start, mut words, mut in_word) = (0, 0, false);
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            in_word = false;
            continue;
        }
        if !in_word {
            in_word = true;
            if words == max_words {
                out.push(range.start + start..range.start + i);
                start = i;
                words = 0;
            }
            words += 1;
        }
    }
    out.push(range.start + start..range.end);
    out
}

/// Packs `pieces` greedily into ranges of at most `target` tokens.
fn pack(doc: &str, pieces: Vec<Range<usize>>, target: usize, out: &mut Vec<Range<usize>>) {
    let mut current: Option<Range<usize>> = None;
    for p in pieces {
        current = match current {
            Some(c) if estimate_tokens(&doc[c.start..p.end]) <= target => Some(c.start..p.end),
            Some(c) => {
                out.push(c);
                Some(p)
            }
            None => Some(p),
        };
    }
    out.extend(current);
}

/// A block as pieces no larger than `target`, where possible.
fn pieces(doc: &str, range: Range<usize>, target: usize) -> Vec<Range<usize>> {
    if estimate_tokens(&doc[range.clone()]) <= target {
        return vec![range];
    }
    let max_words = (target * 10 / 13).max(1);
    let mut small = Vec::new();
    for s in sentences(doc, range) {
        if estimate_tokens(&doc[s.clone()]) <= target {
            small.push(s);
        } else {
            small.extend(word_chunks(doc, s, max_words));
        }
    }
    let mut out = Vec::new();
    pack(doc, small, target, &mut out);
    out
}

/// Splits `doc` into spans in document order. An empty document has no
/// spans; a document without blocks is one span.
pub fn split(doc: &str, target_span_tokens: usize) -> SpanPlan {
    let target = target_span_tokens.max(1);
    let mut ranges: Vec<Range<usize>> = Vec::new();
    let mut current: Option<Range<usize>> = None;
    for block in blocks(doc) {
        for piece in pieces(doc, block.range.clone(), target) {
            let starts_section = block.heading && piece.start == block.range.start;
            current = match current {
                Some(c) if !starts_section && estimate_tokens(&doc[c.start..piece.end]) <= target => {
                    Some(c.start..piece.end)
                }
                Some(c) => {
                    ranges.push(c);
                    Some(piece)
                }
                None => Some(piece),
            };
        }
    }
    ranges.extend(current);
    SpanPlan {
        spans: ranges.into_iter().map(|r| Span { text: doc[r.clone()].to_string(), range: r }).collect(),
        target_span_tokens: target,
    }
}
