//! Classification of a single pair against the model.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use super::{Category, Differing, Feedback, Finding, LogicWarning, Subject, VerifierConfig, VerifyError, WarningKind};
use crate::logic::{Assignment, Term};
use crate::policy::PolicyModel;
use crate::solver::{Label, Query, Rules, Solver, SolverError, Verdict};
use crate::translator::{ClaimPair, Confidence};

/// Which pair's implication an assignment satisfies; it violates the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distinction {
    pub assignment: Assignment,
    pub satisfies: Side,
}

#[derive(Debug, Error)]
pub enum DistinguishError {
    #[error("the two pairs are equivalent under the policy")]
    Equivalent,
    #[error("solver could not decide: {0}")]
    Unknown(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn query<'a>(
    model: &'a PolicyModel,
    rules: Rules<'a>,
    extra: Vec<Term>,
    core: bool,
    timeout: Option<Duration>,
) -> Query<'a> {
    let mut q = Query::new(model, extra).rules(rules);
    q.want_core = core;
    q.timeout = timeout;
    q
}

/// An assignment consistent with the model under which exactly one of the
/// two implications holds. The one violating `a` is preferred.
pub fn distinguishing_assignment(
    a: &ClaimPair,
    b: &ClaimPair,
    model: &PolicyModel,
    solver: &Solver,
    timeout: Option<Duration>,
) -> Result<Distinction, DistinguishError> {
    let (ia, ib) = (a.implication(), b.implication());
    let mut unknown = None;
    for (keep, drop, side) in [(&ib, &ia, Side::B), (&ia, &ib, Side::A)] {
        match solver.run(&query(model, Rules::All, vec![keep.clone(), Term::not(drop.clone())], false, timeout))? {
            Verdict::Sat(assignment) => return Ok(Distinction { assignment, satisfies: side }),
            Verdict::Unsat(_) => {}
            Verdict::Unknown(r) => unknown = Some(r),
        }
    }
    Err(unknown.map_or(DistinguishError::Equivalent, DistinguishError::Unknown))
}

fn rule_ids(model: &PolicyModel, core: &BTreeSet<Label>) -> Vec<String> {
    model.rules.iter().filter(|r| core.contains(&Label::Rule(r.id.clone()))).map(|r| r.id.clone()).collect()
}

/// A clause excluding `a` on its solver-determined bindings.
fn blocking(a: &Assignment) -> Option<Term> {
    let eqs: Vec<Term> = a
        .bindings
        .iter()
        .filter(|(k, _)| !a.arbitrary.contains(*k))
        .filter_map(|(k, v)| Some(Term::eq(Term::var(k), v.to_term()?)))
        .collect();
    (!eqs.is_empty()).then(|| Term::not(Term::and_all(eqs)))
}

/// Up to `n` further models of `base`, each differing from all before.
fn enumerate(
    model: &PolicyModel,
    solver: &Solver,
    base: Vec<Term>,
    first: &Assignment,
    n: usize,
    timeout: Option<Duration>,
) -> Result<Vec<Assignment>, SolverError> {
    let mut extra = base;
    let mut prev = first.clone();
    let mut out = Vec::new();
    while out.len() < n {
        let Some(block) = blocking(&prev) else { break };
        extra.push(block);
        match solver.run(&query(model, Rules::All, extra.clone(), false, timeout))? {
            Verdict::Sat(a) => {
                out.push(a.clone());
                prev = a;
            }
            _ => break,
        }
    }
    Ok(out)
}

/// Classifies one pair. A pair without a confidence counts as fully
/// supported. `alternatives` are pairs from disagreeing translations, used
/// to explain an ambiguous finding.
pub fn classify(
    pair: &ClaimPair,
    model: &PolicyModel,
    solver: &Solver,
    config: &VerifierConfig,
    alternatives: &[ClaimPair],
) -> Result<Finding, VerifyError> {
    let mut finding = Finding {
        category: Category::Satisfiable,
        pair: Some(pair.clone()),
        feedback: Feedback::default(),
        audit_transcript: None,
    };
    let conf = pair.confidence.unwrap_or(Confidence::ONE);
    if !conf.meets(config.threshold) {
        finding.category = Category::TranslationAmbiguous;
        for other in alternatives {
            match distinguishing_assignment(pair, other, model, solver, config.timeout) {
                Ok(distinction) => {
                    finding.feedback.differing = Some(Differing { other: other.clone(), distinction });
                    break;
                }
                Err(DistinguishError::Solver(e)) => return Err(e.into()),
                Err(_) => {}
            }
        }
        return Ok(finding);
    }

    let (p, c) = (pair.premise.clone(), pair.conclusion.clone());
    let t = config.timeout;
    let unknown = |mut f: Finding, step: &str, r: String| {
        f.category = Category::TooComplex;
        f.feedback.reason = Some(format!("solver returned unknown while checking {step}: {r}"));
        Ok(f)
    };

    let base = match solver.run(&query(model, Rules::All, vec![p.clone()], true, t))? {
        Verdict::Unsat(core) => {
            finding.category = Category::Impossible;
            finding.feedback.relevant_rules = rule_ids(model, &core);
            return Ok(finding);
        }
        Verdict::Sat(a) => a,
        Verdict::Unknown(r) => return unknown(finding, "the premise", r),
    };

    let counter = match solver.run(&query(model, Rules::All, vec![p.clone(), Term::not(c.clone())], true, t))? {
        Verdict::Unsat(core) => {
            finding.category = Category::Valid;
            finding.feedback.relevant_rules = rule_ids(model, &core);
            finding.feedback.scenario = Some(base);
            return Ok(finding);
        }
        Verdict::Sat(a) => a,
        Verdict::Unknown(r) => return unknown(finding, "whether the conclusion follows", r),
    };

    let scenario = match solver.run(&query(model, Rules::All, vec![p.clone(), c.clone()], true, t))? {
        Verdict::Unsat(core) => {
            finding.category = Category::Invalid;
            finding.feedback.relevant_rules = rule_ids(model, &core);
            finding.feedback.counter_example = Some(counter);
            return Ok(finding);
        }
        Verdict::Sat(a) => a,
        Verdict::Unknown(r) => return unknown(finding, "whether the conclusion can hold", r),
    };

    let more = config.enumerate.saturating_sub(1);
    if more > 0 {
        finding.feedback.more_scenarios = enumerate(model, solver, vec![p.clone(), c.clone()], &scenario, more, t)?;
        finding.feedback.more_counter_examples = enumerate(model, solver, vec![p, Term::not(c)], &counter, more, t)?;
    }
    finding.feedback.scenario = Some(scenario);
    finding.feedback.counter_example = Some(counter);
    Ok(finding)
}

/// Premise and conclusion checked alone, without any rule. A premise that
/// is the literal `true` (no stated conditions) is not reported.
pub fn logic_warnings(
    pair: &ClaimPair,
    model: &PolicyModel,
    solver: &Solver,
    config: &VerifierConfig,
) -> Result<Vec<LogicWarning>, VerifyError> {
    let mut out = Vec::new();
    for (subject, term) in [(Subject::Premise, &pair.premise), (Subject::Conclusion, &pair.conclusion)] {
        if subject == Subject::Premise && *term == Term::Bool(true) {
            continue;
        }
        for (kind, extra) in
            [(WarningKind::AlwaysTrue, Term::not(term.clone())), (WarningKind::AlwaysFalse, term.clone())]
        {
            if let Verdict::Unsat(_) = solver.run(&query(model, Rules::None, vec![extra], false, config.timeout))? {
                out.push(LogicWarning { subject, kind });
            }
        }
    }
    Ok(out)
}
