//! Variable similarity for composition.

use std::collections::BTreeSet;

use super::VariableSpec;

/// Scores how likely two variables denote the same concept, in `[0, 1]`.
pub trait EmbeddingProvider: Send + Sync {
    fn similarity(&self, a: &VariableSpec, b: &VariableSpec) -> f64;
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "if", "in", "is", "it", "of", "on", "or", "the",
    "that", "this", "to", "was", "whether", "which", "with",
];

/// Offline default: Jaccard similarity of token sets drawn from the
/// camelCase-split name and the description.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalEmbedder;

/// Splits `admissionFee_2` into `admission`, `fee`, `2`.
pub fn name_tokens(name: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in name.chars() {
        let boundary = match prev {
            _ if c == '_' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                prev = None;
                continue;
            }
            Some(p) => (p.is_ascii_lowercase() && c.is_ascii_uppercase()) || (p.is_ascii_digit() != c.is_ascii_digit()),
            None => false,
        };
        if boundary && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        cur.push(c.to_ascii_lowercase());
        prev = Some(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn tokens(v: &VariableSpec) -> BTreeSet<String> {
    let words = v.description.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase);
    name_tokens(&v.name)
        .into_iter()
        .chain(words)
        .filter(|t| t.len() > 1 || t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

impl EmbeddingProvider for LexicalEmbedder {
    fn similarity(&self, a: &VariableSpec, b: &VariableSpec) -> f64 {
        let (ta, tb) = (tokens(a), tokens(b));
        let union = ta.union(&tb).count();
        if union == 0 {
            return if a.name == b.name { 1.0 } else { 0.0 };
        }
        ta.intersection(&tb).count() as f64 / union as f64
    }
}
