//! Checking natural-language claims against a policy model.
//!
//! Text is translated by every backend of a pool, pairs are scored by how
//! many translations support them, and each pair is classified by solver
//! queries against the model.

mod classify;
mod redundant;
mod render;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Assignment, Term};
use crate::policy::PolicyModel;
use crate::solver::{Solver, SolverError};
use crate::translator::{digest, ClaimPair, Confidence, TranslatorError, TranslatorPool, DEFAULT_REPAIR_BUDGET};

pub use classify::{classify, distinguishing_assignment, logic_warnings, Distinction, DistinguishError, Side};
pub use redundant::{redundant_translate, Redundant, Scored};
pub use render::{assignment_json, finding_json, findings_json, render_feedback};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Translator(#[from] TranslatorError),
    #[error("writing audit transcript {path}: {source}")]
    Audit { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    NoTranslations,
    TooComplex,
    TranslationAmbiguous,
    Impossible,
    Invalid,
    Satisfiable,
    Valid,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::NoTranslations,
        Category::TooComplex,
        Category::TranslationAmbiguous,
        Category::Impossible,
        Category::Invalid,
        Category::Satisfiable,
        Category::Valid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::NoTranslations => "NO_TRANSLATIONS",
            Category::TooComplex => "TOO_COMPLEX",
            Category::TranslationAmbiguous => "TRANSLATION_AMBIGUOUS",
            Category::Impossible => "IMPOSSIBLE",
            Category::Invalid => "INVALID",
            Category::Satisfiable => "SATISFIABLE",
            Category::Valid => "VALID",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    /// Accepts `TRANSLATION_AMBIGUOUS`, `TranslationAmbiguous` and the like.
    fn from_str(s: &str) -> Result<Self, String> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != ' ').collect::<String>().to_lowercase();
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().replace('_', "").to_lowercase() == key)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Subject {
    Premise,
    Conclusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum WarningKind {
    AlwaysTrue,
    AlwaysFalse,
}

/// A premise or conclusion that is constant regardless of the rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LogicWarning {
    pub subject: Subject,
    pub kind: WarningKind,
}

/// Two translations that disagree, and an assignment separating them.
#[derive(Debug, Clone, PartialEq)]
pub struct Differing {
    pub other: ClaimPair,
    pub distinction: Distinction,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Feedback {
    pub relevant_rules: Vec<String>,
    pub scenario: Option<Assignment>,
    pub counter_example: Option<Assignment>,
    /// Further assignments when enumeration is enabled.
    pub more_scenarios: Vec<Assignment>,
    pub more_counter_examples: Vec<Assignment>,
    pub differing: Option<Differing>,
    pub untranslatable: Vec<String>,
    pub warnings: Vec<LogicWarning>,
    /// Why the engine gave up, for `TOO_COMPLEX`.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub category: Category,
    pub pair: Option<ClaimPair>,
    pub feedback: Feedback,
    pub audit_transcript: Option<PathBuf>,
}

impl Finding {
    pub fn bare(category: Category) -> Self {
        Self { category, pair: None, feedback: Feedback::default(), audit_transcript: None }
    }
}

#[derive(Debug, Clone)]
pub struct VerifierConfig {
    pub threshold: Confidence,
    pub max_input_chars: usize,
    pub max_term_nodes: usize,
    /// Per-query solver timeout; the solver default when unset.
    pub timeout: Option<Duration>,
    /// Up to this many scenarios and counter-examples (at least one).
    pub enumerate: usize,
    pub repair_budget: usize,
    /// Where to write per-call SMT-LIB transcripts.
    pub audit_dir: Option<PathBuf>,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            threshold: Confidence::ONE,
            max_input_chars: 20_000,
            max_term_nodes: 5_000,
            timeout: None,
            enumerate: 1,
            repair_budget: DEFAULT_REPAIR_BUDGET,
            audit_dir: None,
        }
    }
}

fn too_complex(reason: String, pair: Option<ClaimPair>) -> Finding {
    let mut f = Finding::bare(Category::TooComplex);
    f.pair = pair;
    f.feedback.reason = Some(reason);
    f
}

fn sort_key(pair: &ClaimPair) -> (String, String) {
    (pair.premise.to_string(), pair.conclusion.to_string())
}

/// The text a question-answer pair is verified as.
pub fn qa_text(question: &str, answer: &str) -> String {
    format!("Question: {}\nAnswer: {}", question.trim(), answer.trim())
}

/// One category for a whole text: the least favorable category among the
/// pair findings, in the order of [`Category::ALL`]. Untranslatable parts
/// only decide the outcome when no pair was found.
pub fn overall_category(findings: &[Finding]) -> Category {
    let rank = |c: Category| Category::ALL.iter().position(|x| *x == c).expect("listed");
    findings
        .iter()
        .map(|f| f.category)
        .filter(|c| *c != Category::NoTranslations)
        .min_by_key(|c| rank(*c))
        .unwrap_or(Category::NoTranslations)
}

/// Translates `text` with every backend and classifies each resulting pair.
pub fn validate(
    text: &str,
    model: &PolicyModel,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &VerifierConfig,
) -> Result<Vec<Finding>, VerifyError> {
    if text.chars().count() > config.max_input_chars {
        return Ok(vec![too_complex(
            format!("input has {} characters, limit is {}", text.chars().count(), config.max_input_chars),
            None,
        )]);
    }
    let solver = if config.audit_dir.is_some() { solver.recording() } else { solver.clone() };
    let red = redundant_translate(text, model, pool, &solver, config)?;

    let mut findings = Vec::new();
    if !red.untranslatable.is_empty() || (red.scored.is_empty() && red.undetermined.is_empty()) {
        let mut f = Finding::bare(Category::NoTranslations);
        f.feedback.untranslatable = if red.untranslatable.is_empty() && !text.trim().is_empty() {
            vec![text.trim().to_string()]
        } else {
            red.untranslatable.clone()
        };
        findings.push(f);
    }

    let mut pair_findings: Vec<Finding> =
        red.undetermined.iter().map(|(pair, reason)| too_complex(reason.clone(), Some(pair.clone()))).collect();
    let scored = &red.scored;
    let classified: Vec<Result<Finding, VerifyError>> = std::thread::scope(|s| {
        let handles: Vec<_> = scored
            .iter()
            .map(|sc| {
                let solver = &solver;
                let red = &red;
                s.spawn(move || -> Result<Finding, VerifyError> {
                    let pair = &sc.pair;
                    if pair.premise.size() > config.max_term_nodes || pair.conclusion.size() > config.max_term_nodes {
                        return Ok(too_complex(
                            format!("translated terms exceed {} nodes", config.max_term_nodes),
                            Some(pair.clone()),
                        ));
                    }
                    let others = red.non_supporting(sc);
                    let mut f = classify(pair, model, solver, config, &others)?;
                    if f.category != Category::TooComplex {
                        f.feedback.warnings = logic_warnings(pair, model, solver, config)?;
                    }
                    Ok(f)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("classification thread panicked")).collect()
    });
    for f in classified {
        pair_findings.push(f?);
    }
    pair_findings.sort_by_key(|f| f.pair.as_ref().map(sort_key));
    findings.extend(pair_findings);

    if let Some(dir) = &config.audit_dir {
        let path = dir.join(format!("audit-{}.smt2", &digest(text)[..16]));
        fs::create_dir_all(dir)
            .and_then(|_| fs::write(&path, solver.transcript().unwrap_or_default()))
            .map_err(|source| VerifyError::Audit { path: path.clone(), source })?;
        for f in &mut findings {
            f.audit_transcript = Some(path.clone());
        }
    }
    Ok(findings)
}

/// The conjunction of a translation's implications.
pub(crate) fn conjunction(pairs: &[ClaimPair]) -> Term {
    Term::and_all(pairs.iter().map(ClaimPair::implication).collect())
}
