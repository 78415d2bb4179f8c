//! Prompt templates and extraction of fenced blocks from chat replies.

use std::fs;
use std::io;
use std::path::Path;

use crate::logic::sexpr::Reader;

/// Editable prompt texts. Slots are written `{name}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub claims: String,
    pub span: String,
    pub repair: String,
    pub revise: String,
    pub policy_repair: String,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            claims: include_str!("../../templates/claims.txt").into(),
            span: include_str!("../../templates/span.txt").into(),
            repair: include_str!("../../templates/repair.txt").into(),
            revise: include_str!("../../templates/revise.txt").into(),
            policy_repair: include_str!("../../templates/policy_repair.txt").into(),
        }
    }
}

impl Templates {
    /// Defaults, with any of `claims.txt`, `span.txt`, ... found in `dir`
    /// taking precedence.
    pub fn from_dir(dir: &Path) -> io::Result<Self> {
        let mut t = Self::default();
        for (file, slot) in [
            ("claims.txt", &mut t.claims),
            ("span.txt", &mut t.span),
            ("repair.txt", &mut t.repair),
            ("revise.txt", &mut t.revise),
            ("policy_repair.txt", &mut t.policy_repair),
        ] {
            let path = dir.join(file);
            if path.exists() {
                *slot = fs::read_to_string(path)?;
            }
        }
        Ok(t)
    }
}

/// Fills `{name}` slots in one pass, so slot values are never re-expanded.
pub fn render(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            slots.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Fenced blocks as `(info string, body)`. Text outside fences is ignored;
/// an unterminated fence runs to the end of the reply.
pub fn extract_fenced(text: &str) -> Vec<(String, String)> {
    let mut blocks = Vec::new();
    let mut open: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(info) = trimmed.strip_prefix("```") {
            match open.take() {
                Some((tag, body)) => blocks.push((tag, body.join("\n"))),
                None => open = Some((info.trim().to_lowercase(), Vec::new())),
            }
        } else if let Some((_, body)) = open.as_mut() {
            body.push(line);
        }
    }
    if let Some((tag, body)) = open {
        blocks.push((tag, body.join("\n")));
    }
    blocks
}

/// Splits the body of a code block into top-level s-expressions. Text that
/// does not read as one is returned whole so the repair loop sees it.
pub(crate) fn split_exprs(body: &str) -> Vec<String> {
    let mut reader = Reader::new(body);
    let mut out = Vec::new();
    loop {
        match reader.next_expr() {
            Ok(Some(e)) => out.push(e.to_string()),
            Ok(None) => return out,
            Err(_) => {
                if body.trim().is_empty() {
                    return out;
                }
                return vec![body.trim().to_string()];
            }
        }
    }
}
