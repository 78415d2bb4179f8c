//! Positioned s-expression reader shared by the term parser and the solver
//! response reader.

use std::fmt;

use thiserror::Error;

/// Byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    /// A simple or quoted symbol. `quoted` is true for `|...|` symbols.
    Symbol {
        name: String,
        quoted: bool,
    },
    Numeral(String),
    Decimal(String),
    Str(String),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(Atom, Span),
    List(Vec<SExpr>, Span),
}

impl SExpr {
    pub fn span(&self) -> Span {
        match self {
            SExpr::Atom(_, s) | SExpr::List(_, s) => *s,
        }
    }

    /// The name if this is a symbol atom.
    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Atom(Atom::Symbol { name, .. }, _) => Some(name),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(atom, _) => match atom {
                Atom::Symbol { name, quoted: true } => write!(f, "|{name}|"),
                Atom::Symbol { name, .. } => f.write_str(name),
                Atom::Numeral(s) | Atom::Decimal(s) => f.write_str(s),
                Atom::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
                Atom::Keyword(k) => write!(f, ":{k}"),
            },
            SExpr::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A malformed s-expression, positioned by byte offset and 1-based line/column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: {message}")]
pub struct SyntaxError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn at(text: &str, offset: usize, message: impl Into<String>) -> Self {
        let (line, column) = line_col(text, offset);
        SyntaxError { offset, line, column, message: message.into() }
    }
}

/// 1-based line and column (in chars) of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
    (line, before[line_start..].chars().count() + 1)
}

/// A `;` comment, kept so script readers can attach descriptions to
/// declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub text: String,
    pub span: Span,
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// Incremental reader over a text buffer.
pub struct Reader<'a> {
    text: &'a str,
    pos: usize,
    comments: Vec<Comment>,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str) -> Self {
        Reader { text, pos: 0, comments: Vec::new() }
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn err(&self, offset: usize, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::at(self.text, offset, msg)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if c == ';' {
                let start = self.pos;
                let end = self.text[start..].find('\n').map(|i| start + i).unwrap_or(self.text.len());
                self.comments
                    .push(Comment { text: self.text[start + 1..end].trim().to_string(), span: Span { start, end } });
                self.pos = end;
            } else {
                break;
            }
        }
    }

    /// True when only whitespace and comments remain.
    pub fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.pos >= self.text.len()
    }

    /// Reads the next complete s-expression, or `None` at end of input.
    pub fn next_expr(&mut self) -> Result<Option<SExpr>, SyntaxError> {
        if self.at_end() {
            return Ok(None);
        }
        self.read().map(Some)
    }

    fn read(&mut self) -> Result<SExpr, SyntaxError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Err(self.err(start, "unexpected end of input"));
        };
        match c {
            '(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return Err(self.err(start, "unbalanced parenthesis: `(` is never closed")),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(SExpr::List(items, Span { start, end: self.pos }));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            ')' => Err(self.err(start, "unexpected `)`")),
            '"' => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    match self.peek() {
                        None => return Err(self.err(start, "unterminated string literal")),
                        Some('"') => {
                            self.pos += 1;
                            if self.peek() == Some('"') {
                                out.push('"');
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                        Some(ch) => {
                            out.push(ch);
                            self.pos += ch.len_utf8();
                        }
                    }
                }
                Ok(SExpr::Atom(Atom::Str(out), Span { start, end: self.pos }))
            }
            '|' => {
                self.pos += 1;
                let Some(len) = self.text[self.pos..].find('|') else {
                    return Err(self.err(start, "unterminated quoted symbol"));
                };
                let name = self.text[self.pos..self.pos + len].to_string();
                self.pos += len + 1;
                Ok(SExpr::Atom(Atom::Symbol { name, quoted: true }, Span { start, end: self.pos }))
            }
            ':' => {
                self.pos += 1;
                let name = self.take_while(is_symbol_char);
                if name.is_empty() {
                    return Err(self.err(start, "empty keyword"));
                }
                Ok(SExpr::Atom(Atom::Keyword(name), Span { start, end: self.pos }))
            }
            c if c.is_ascii_digit() => {
                let token = self.take_while(is_symbol_char);
                let span = Span { start, end: self.pos };
                if token.bytes().all(|b| b.is_ascii_digit()) {
                    Ok(SExpr::Atom(Atom::Numeral(token), span))
                } else if let Some((int, frac)) = token.split_once('.') {
                    if !int.is_empty()
                        && !frac.is_empty()
                        && int.bytes().all(|b| b.is_ascii_digit())
                        && frac.bytes().all(|b| b.is_ascii_digit())
                    {
                        Ok(SExpr::Atom(Atom::Decimal(token), span))
                    } else {
                        Err(self.err(start, format!("malformed number `{token}`")))
                    }
                } else {
                    Err(self.err(start, format!("symbol `{token}` may not start with a digit")))
                }
            }
            c if is_symbol_char(c) => {
                let name = self.take_while(is_symbol_char);
                Ok(SExpr::Atom(Atom::Symbol { name, quoted: false }, Span { start, end: self.pos }))
            }
            other => Err(self.err(start, format!("unexpected character `{other}`"))),
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        self.text[start..self.pos].to_string()
    }
}

/// Reads exactly one s-expression from `text`.
pub fn parse_one(text: &str) -> Result<SExpr, SyntaxError> {
    let mut reader = Reader::new(text);
    let Some(expr) = reader.next_expr()? else {
        return Err(SyntaxError::at(text, 0, "empty input"));
    };
    if !reader.at_end() {
        let pos = reader.position();
        return Err(SyntaxError::at(text, pos, "trailing input after expression"));
    }
    Ok(expr)
}

/// Reads every s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, SyntaxError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while let Some(e) = reader.next_expr()? {
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_spans() {
        let e = parse_one("(=> p (= x 0.75))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].as_symbol(), Some("=>"));
        assert_eq!(items[2].span(), Span { start: 6, end: 16 });
        assert_eq!(e.to_string(), "(=> p (= x 0.75))");
    }

    #[test]
    fn unbalanced_reports_open_position() {
        let err = parse_one("(and p\n  (or q r)").unwrap_err();
        assert_eq!((err.offset, err.line, err.column), (0, 1, 1));
        let err = parse_one("(not p))").unwrap_err();
        assert_eq!(err.offset, 7);
    }

    #[test]
    fn comments_are_collected() {
        let mut r = Reader::new("(declare-const x Int) ; the x\n(assert x)");
        r.next_expr().unwrap();
        r.next_expr().unwrap();
        assert_eq!(r.comments()[0].text, "the x");
    }

    #[test]
    fn numbers_and_bad_symbols() {
        assert!(matches!(parse_one("12").unwrap(), SExpr::Atom(Atom::Numeral(_), _)));
        assert!(matches!(parse_one("1.50").unwrap(), SExpr::Atom(Atom::Decimal(_), _)));
        assert!(parse_one("1.").is_err());
        assert!(parse_one("3abc").is_err());
        assert!(parse_one("").is_err());
    }

    #[test]
    fn line_col_counts_chars() {
        assert_eq!(line_col("ab\ncé d", 7), (2, 4));
    }
}
