//! Static and solver-backed checks on a policy model.

use std::fmt;

use serde::Serialize;

use crate::logic::Term;
use crate::policy::PolicyModel;
use crate::solver::{Label, Query, Rules, Solver, SolverError, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LintCode {
    UnusedVariable,
    ContradictoryRules,
    UnsatRule,
    TautologicalRule,
    DuplicateRule,
    /// A check the solver could not decide.
    Undecided,
}

impl LintCode {
    pub fn severity(self) -> Severity {
        match self {
            LintCode::ContradictoryRules | LintCode::UnsatRule => Severity::Error,
            _ => Severity::Warning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintItem {
    pub code: LintCode,
    pub severity: Severity,
    /// Rule id or variable name.
    pub subject: String,
    pub message: String,
    /// Rule ids of the unsat core, for contradictions.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub core: Vec<String>,
}

impl fmt::Display for LintItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let code =
            serde_json::to_value(self.code).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        write!(f, "{sev}[{code}] {}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub errors: Vec<LintItem>,
    pub warnings: Vec<LintItem>,
}

impl LintReport {
    fn push(&mut self, code: LintCode, subject: impl Into<String>, message: impl Into<String>, core: Vec<String>) {
        let item = LintItem { code, severity: code.severity(), subject: subject.into(), message: message.into(), core };
        match item.severity {
            Severity::Error => self.errors.push(item),
            Severity::Warning => self.warnings.push(item),
        }
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &LintItem> {
        self.errors.iter().chain(self.warnings.iter())
    }

    pub fn codes(&self) -> Vec<LintCode> {
        self.items().map(|i| i.code).collect()
    }
}

fn run(
    solver: &Solver,
    model: &PolicyModel,
    rules: Rules<'_>,
    extra: Vec<Term>,
    core: bool,
) -> Result<Verdict, SolverError> {
    let mut q = Query::new(model, extra).rules(rules);
    q.want_core = core;
    solver.run(&q)
}

/// Lints `model`. Duplicates are only looked for among rules over the same
/// variables.
pub fn lint(model: &PolicyModel, solver: &Solver) -> Result<LintReport, SolverError> {
    model.validate()?;
    let mut report = LintReport::default();
    for v in model.unused_variables() {
        report.push(LintCode::UnusedVariable, v, "declared but not used by any rule", vec![]);
    }

    match run(solver, model, Rules::All, vec![], true)? {
        Verdict::Unsat(core) => {
            let ids: Vec<String> = model
                .rules
                .iter()
                .filter(|r| core.contains(&Label::Rule(r.id.clone())))
                .map(|r| r.id.clone())
                .collect();
            report.push(
                LintCode::ContradictoryRules,
                ids.join(", "),
                format!("rules {} cannot all hold together", ids.join(", ")),
                ids,
            );
        }
        Verdict::Sat(_) => {}
        Verdict::Unknown(r) => report.push(LintCode::Undecided, "*", format!("consistency of all rules: {r}"), vec![]),
    }

    // Rules that are constant on their own are not compared for duplicates.
    let mut plain = Vec::new();
    for rule in &model.rules {
        let only = std::slice::from_ref(&rule.id);
        match run(solver, model, Rules::Only(only), vec![], false)? {
            Verdict::Unsat(_) => {
                report.push(LintCode::UnsatRule, &rule.id, "the rule can never hold", vec![]);
                continue;
            }
            Verdict::Unknown(r) => {
                report.push(LintCode::Undecided, &rule.id, format!("satisfiability: {r}"), vec![]);
                continue;
            }
            Verdict::Sat(_) => {}
        }
        match run(solver, model, Rules::None, vec![Term::not(rule.term.clone())], false)? {
            Verdict::Unsat(_) => {
                report.push(
                    LintCode::TautologicalRule,
                    &rule.id,
                    "the rule always holds and constrains nothing",
                    vec![],
                );
            }
            Verdict::Unknown(r) => report.push(LintCode::Undecided, &rule.id, format!("validity: {r}"), vec![]),
            Verdict::Sat(_) => plain.push(rule),
        }
    }

    for (i, a) in plain.iter().enumerate() {
        for b in &plain[i + 1..] {
            if a.term.free_vars() != b.term.free_vars() {
                continue;
            }
            let differ = Term::not(Term::eq(a.term.clone(), b.term.clone()));
            match run(solver, model, Rules::None, vec![differ], false)? {
                Verdict::Unsat(_) => report.push(
                    LintCode::DuplicateRule,
                    &b.id,
                    format!("equivalent to rule {}", a.id),
                    vec![a.id.clone(), b.id.clone()],
                ),
                Verdict::Unknown(r) => {
                    report.push(LintCode::Undecided, &b.id, format!("equivalence with rule {}: {r}", a.id), vec![])
                }
                Verdict::Sat(_) => {}
            }
        }
    }
    Ok(report)
}
