//! Vetting a policy model: linting, rendering for review, repair from
//! reviewer feedback, and test suites.

mod english;
mod lint;
mod repair;
mod symbolic;

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::parse_formula;
use crate::policy::{PolicyModel, VettedStamp};
use crate::solver::{Solver, SolverError};
use crate::translator::{ClaimPair, Confidence, TranslatorError, TranslatorPool};
use crate::verifier::{classify, overall_category, qa_text, validate, Category, Finding, VerifierConfig, VerifyError};

pub use english::render_structured_english;
pub use lint::{lint, LintCode, LintItem, LintReport, Severity};
pub use repair::repair_from_feedback;
pub use symbolic::{generate_symbolic_tests, Generation, GeneratorConfig};

#[derive(Debug, Error)]
pub enum VetError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Translator(#[from] TranslatorError),
    #[error("no rule with id `{0}`")]
    UnknownRule(String),
    #[error("repair rejected: {}", .0.join("; "))]
    RepairRejected(Vec<String>),
    #[error("the model's rules are contradictory; no test cases can be drawn from it")]
    ModelUnsat,
    #[error("symbolic tests need at least two variables, the model has {0}")]
    TooFewVariables(usize),
    #[error("natural-language test cases need a translator")]
    NoTranslator,
    #[error("test case {case}: {message}")]
    BadCase { case: String, message: String },
    #[error("test suite {path}: {message}")]
    Suite { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestKind {
    Qa {
        question: String,
        answer: String,
    },
    Statement {
        text: String,
    },
    /// Terms in SMT-LIB syntax over the model's vocabulary.
    Symbolic {
        premise: String,
        conclusion: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    User,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(flatten)]
    pub kind: TestKind,
    pub expected: Category,
    #[serde(default)]
    pub provenance: Provenance,
}

impl TestCase {
    pub fn label(&self, index: usize) -> String {
        self.id.clone().unwrap_or_else(|| format!("#{}", index + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub case: TestCase,
    pub actual: Category,
    pub pass: bool,
    pub findings: Vec<Finding>,
    /// Set on failure.
    pub note: Option<String>,
}

pub fn load_suite(path: &Path) -> Result<Vec<TestCase>, VetError> {
    let suite = |message: String| VetError::Suite { path: path.display().to_string(), message };
    let text = fs::read_to_string(path).map_err(|e| suite(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| suite(e.to_string()))
}

pub fn save_suite(path: &Path, cases: &[TestCase]) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(cases).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Runs each case: natural-language cases through the full verifier,
/// symbolic cases straight through classification.
pub fn run_tests(
    cases: &[TestCase],
    model: &PolicyModel,
    pool: Option<&TranslatorPool>,
    solver: &Solver,
    config: &VerifierConfig,
) -> Result<Vec<TestOutcome>, VetError> {
    let env = model.validate().map_err(SolverError::from)?;
    let mut out = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let findings = match &case.kind {
            TestKind::Qa { question, answer } => {
                validate(&qa_text(question, answer), model, pool.ok_or(VetError::NoTranslator)?, solver, config)?
            }
            TestKind::Statement { text } => validate(text, model, pool.ok_or(VetError::NoTranslator)?, solver, config)?,
            TestKind::Symbolic { premise, conclusion } => {
                let parse = |t: &str| {
                    parse_formula(t, &env)
                        .map_err(|e| VetError::BadCase { case: case.label(i), message: e.to_string() })
                };
                let mut pair = ClaimPair::new(parse(premise)?, parse(conclusion)?);
                pair.confidence = Some(Confidence::ONE);
                vec![classify(&pair, model, solver, config, &[])?]
            }
        };
        let actual = overall_category(&findings);
        let pass = actual == case.expected;
        let note = (!pass).then(|| match case.kind {
            TestKind::Symbolic { .. } => format!("expected {}, the model yields {actual}", case.expected),
            _ => format!(
                "expected {}, got {actual}; either the policy model or the translation of this case is wrong",
                case.expected
            ),
        });
        out.push(TestOutcome { case: case.clone(), actual, pass, findings, note });
    }
    Ok(out)
}

/// Marks `model` vetted when lint finds no errors and every outcome passed.
pub fn stamp(
    model: &PolicyModel,
    report: &LintReport,
    outcomes: &[TestOutcome],
    by: Option<String>,
    at: Option<String>,
    suite: Option<String>,
) -> Option<PolicyModel> {
    if report.has_errors() || outcomes.iter().any(|o| !o.pass) {
        return None;
    }
    let mut m = model.clone();
    m.vetted = Some(VettedStamp { by, at, suite });
    Some(m)
}
