//! Building a policy model from a document: split, formalize each span with
//! the model so far as context, and fold the span's unit into the model.

mod split;

use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::policy::{compose, EmbeddingProvider, LexicalEmbedder, PolicyModel, PolicyUnit, DEFAULT_CLUSTER_THRESHOLD};
use crate::solver::{Query, Rules, Solver, Verdict};
use crate::translator::{formalize_span, TranslatorError, TranslatorPool, DEFAULT_REPAIR_BUDGET};

pub use split::{estimate_tokens, heading_of, is_heading, split, Span, SpanPlan, DEFAULT_TARGET_TOKENS};

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub target_span_tokens: usize,
    pub repair_budget: usize,
    pub cluster_threshold: f64,
    /// Stop at the first failed span instead of skipping it.
    pub fail_fast: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            target_span_tokens: DEFAULT_TARGET_TOKENS,
            repair_budget: DEFAULT_REPAIR_BUDGET,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            fail_fast: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub datatypes: usize,
    pub variables: usize,
    pub rules: usize,
}

impl Counts {
    pub fn of(model: &PolicyModel) -> Self {
        Self { datatypes: model.datatypes.len(), variables: model.variables.len(), rules: model.rules.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SpanStatus {
    Added { rules: usize },
    Empty,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanReport {
    pub index: usize,
    pub range: Range<usize>,
    pub heading: Option<String>,
    #[serde(flatten)]
    pub status: SpanStatus,
    pub repairs: usize,
    /// Model size once this span has been processed.
    pub counts: Counts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildReport {
    pub spans: Vec<SpanReport>,
    pub counts: Counts,
    pub repair_attempts: usize,
    pub failed_spans: usize,
    /// The unit each added span contributed, in document order.
    #[serde(skip)]
    pub units: Vec<PolicyUnit>,
}

impl BuildReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per span: `span,datatypes,variables,rules`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("span,datatypes,variables,rules\n");
        for s in &self.spans {
            let _ = writeln!(out, "{},{},{},{}", s.index + 1, s.counts.datatypes, s.counts.variables, s.counts.rules);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{} span(s) failed: {}", .0.len(), .0.iter().map(|f| format!("span {}: {}", f.index + 1, f.error)).collect::<Vec<_>>().join("; "))]
    BuildFailed(Vec<SpanFailure>),
    #[error("the translator pool is empty")]
    NoBackend,
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

/// Why `candidate` is not acceptable after adding `unit`: contradictory
/// rules, or a new rule that can never hold.
fn gate(candidate: &PolicyModel, unit: &PolicyUnit, solver: &Solver) -> Result<Option<String>, BuildError> {
    if let Verdict::Unsat(_) = solver.run(&Query::new(candidate, vec![]))? {
        return Ok(Some("the span's rules contradict the model built so far".into()));
    }
    for r in &unit.rules {
        if let Verdict::Unsat(_) =
            solver.run(&Query::new(&unit.clone().into_model(), vec![r.term.clone()]).rules(Rules::None))?
        {
            return Ok(Some(format!("rule `{}` can never hold", r.id)));
        }
    }
    Ok(None)
}

/// Builds a model from `document` with the pool's first backend. Failed
/// spans are recorded and skipped unless `config.fail_fast` is set.
pub fn build(
    document: &str,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &BuildConfig,
) -> Result<(PolicyModel, BuildReport), BuildError> {
    build_with(document, pool, solver, config, &LexicalEmbedder)
}

pub fn build_with(
    document: &str,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &BuildConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<(PolicyModel, BuildReport), BuildError> {
    if pool.k() == 0 {
        return Err(BuildError::NoBackend);
    }
    let backend = pool.first();
    let plan = split(document, config.target_span_tokens);
    let mut model = PolicyModel::new();
    let mut report = BuildReport::default();
    let mut failures = Vec::new();

    for (index, span) in plan.spans.iter().enumerate() {
        let heading = heading_of(&span.text);
        let provenance = heading.clone().unwrap_or_else(|| format!("span {}", index + 1));
        let prefix = format!("s{}_", index + 1);
        let outcome = formalize_span(&span.text, &model, backend, config.repair_budget, &prefix, Some(&provenance));
        let (status, repairs) = match outcome {
            Ok(o) if o.unit.rules.is_empty() && o.unit.variables.is_empty() => (SpanStatus::Empty, o.repairs),
            Ok(o) => {
                let folded =
                    compose(&[PolicyUnit::from(model.clone()), o.unit.clone()], embedder, config.cluster_threshold)
                        .map_err(|e| e.to_string());
                let rejected = match &folded {
                    Ok(candidate) => gate(candidate, &o.unit, solver)?,
                    Err(e) => Some(e.clone()),
                };
                match (folded, rejected) {
                    (Ok(candidate), None) => {
                        let rules = o.unit.rules.len();
                        model = candidate;
                        report.units.push(o.unit);
                        (SpanStatus::Added { rules }, o.repairs)
                    }
                    (Err(error), _) | (Ok(_), Some(error)) => (SpanStatus::Failed { error }, o.repairs),
                }
            }
            Err(e) => {
                let attempts = match &e {
                    TranslatorError::MalformedOutput { attempts, .. } => attempts.len(),
                    TranslatorError::BackendUnavailable(_) => 0,
                };
                (SpanStatus::Failed { error: e.to_string() }, attempts)
            }
        };
        if let SpanStatus::Failed { error } = &status {
            failures.push(SpanFailure { index, error: error.clone() });
            report.failed_spans += 1;
            if config.fail_fast {
                return Err(BuildError::BuildFailed(failures));
            }
        }
        report.repair_attempts += repairs;
        report.spans.push(SpanReport {
            index,
            range: span.range.clone(),
            heading,
            status,
            repairs,
            counts: Counts::of(&model),
        });
    }
    report.counts = Counts::of(&model);
    Ok((model, report))
}
