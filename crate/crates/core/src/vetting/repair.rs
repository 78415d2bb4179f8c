//! Rewriting one rule from reviewer feedback.

use crate::policy::{PolicyModel, Rule};
use crate::solver::Solver;
use crate::translator::{
    repair, unit_from_script, vocabulary, PolicyRepairRequest, RepairKind, Translator, TranslatorError,
};

use super::{lint, VetError};

/// Splices the rules of `script` into `model` in place of `rule_id`. A single
/// replacement keeps the id; several become `<id>.1`, `<id>.2`, ...
fn splice(model: &PolicyModel, rule_id: &str, script: &str) -> Result<PolicyModel, String> {
    let pos = model.rules.iter().position(|r| r.id == rule_id).expect("checked by caller");
    let old = &model.rules[pos];
    let mut rest = model.clone();
    rest.rules.remove(pos);
    let unit = unit_from_script(script, &rest, "", old.provenance.as_deref())?;
    if unit.rules.is_empty() {
        return Err("the output contains no assertion".into());
    }
    let n = unit.rules.len();
    let replacements: Vec<Rule> = unit
        .rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| Rule { id: if n == 1 { rule_id.to_string() } else { format!("{rule_id}.{}", i + 1) }, ..r })
        .collect();

    let mut out = model.clone();
    for dt in unit.datatypes {
        if !out.datatypes.iter().any(|d| d.name == dt.name) {
            out.datatypes.push(dt);
        }
    }
    for v in unit.variables {
        if out.variable(&v.name).is_none() {
            out.variables.push(v);
        }
    }
    out.rules.splice(pos..=pos, replacements);
    out.vetted = None;
    out.validate().map_err(|e| e.to_string())?;
    Ok(out)
}

/// Asks `backend` to rewrite rule `rule_id` given free-text `feedback`, gates
/// the result like any span output and lints the new model. The returned
/// model is no longer marked vetted.
pub fn repair_from_feedback(
    model: &PolicyModel,
    rule_id: &str,
    feedback: &str,
    backend: &dyn Translator,
    solver: &Solver,
    budget: usize,
) -> Result<PolicyModel, VetError> {
    if model.rule(rule_id).is_none() {
        return Err(VetError::UnknownRule(rule_id.to_string()));
    }
    let raw = backend.repair_policy(&PolicyRepairRequest { model, rule_id, feedback })?;
    let context = format!("{}\n; rule to replace: {rule_id}", vocabulary(model));
    let candidate = match repair(raw, RepairKind::Policy, &context, backend, budget, |t| splice(model, rule_id, t)) {
        Ok((m, _)) => m,
        Err(TranslatorError::MalformedOutput { initial, attempts }) => {
            return Err(VetError::RepairRejected(std::iter::once(initial).chain(attempts).collect()))
        }
        Err(e) => return Err(e.into()),
    };
    let report = lint(&candidate, solver)?;
    if report.has_errors() {
        return Err(VetError::RepairRejected(report.errors.iter().map(ToString::to_string).collect()));
    }
    Ok(candidate)
}
