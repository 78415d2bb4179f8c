//! The natural-language boundary: turning text into logic and back.
//!
//! Backends produce raw text. Nothing leaves this module until it parses
//! and sort-checks; malformed output goes through a bounded repair loop.

mod http;
mod prompts;
mod scripted;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::sexpr::{Reader, SExpr};
use crate::logic::{parse_formula, parse_script_in, Env, Sort, Term};
use crate::policy::{PolicyModel, PolicyUnit, Rule, VariableSpec};

pub use http::{HttpConfig, HttpTranslator};
pub use prompts::{extract_fenced, Templates};
pub use scripted::{digest, ScriptedTranslator};

pub const DEFAULT_REPAIR_BUDGET: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslatorError {
    #[error("translator backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed translator output after {} repair attempt(s): {initial}", attempts.len())]
    MalformedOutput { initial: String, attempts: Vec<String> },
}

/// An unreduced fraction `num/den` of supporting translations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Confidence {
    pub num: u32,
    pub den: u32,
}

impl Confidence {
    pub const ONE: Confidence = Confidence { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Self {
        assert!(den > 0 && num <= den, "confidence {num}/{den} out of range");
        Self { num, den }
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(self.num.into(), self.den.into())
    }

    /// Compares values, so `2/3` and `4/6` are equal here.
    pub fn cmp_value(self, other: Confidence) -> Ordering {
        (self.num as u64 * other.den as u64).cmp(&(other.num as u64 * self.den as u64))
    }

    pub fn meets(self, threshold: Confidence) -> bool {
        self.cmp_value(threshold) != Ordering::Less
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for Confidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (n, d) = s.split_once('/').ok_or_else(|| format!("expected a fraction like 2/3, got `{s}`"))?;
        let (num, den): (u32, u32) = (
            n.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?,
            d.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?,
        );
        if den == 0 || num == 0 || num > den {
            return Err(format!("fraction `{s}` must lie in (0, 1]"));
        }
        Ok(Confidence { num, den })
    }
}

/// A premise and the conclusion claimed to follow from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimPair {
    pub premise: Term,
    pub conclusion: Term,
    pub confidence: Option<Confidence>,
    pub source_text: String,
}

impl ClaimPair {
    pub fn new(premise: Term, conclusion: Term) -> Self {
        Self { premise, conclusion, confidence: None, source_text: String::new() }
    }

    /// `P ⇒ C`.
    pub fn implication(&self) -> Term {
        Term::implies(self.premise.clone(), self.conclusion.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Translation {
    pub pairs: Vec<ClaimPair>,
    pub untranslatable: Vec<String>,
}

/// Backend output before gating: each claim is `(claim P C)` text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawTranslation {
    pub claims: Vec<String>,
    pub untranslatable: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairKind {
    Claim,
    Span,
    Policy,
}

pub struct RepairRequest<'a> {
    pub kind: RepairKind,
    pub output: &'a str,
    pub diagnostic: &'a str,
    /// Vocabulary or surrounding declarations the output must fit.
    pub context: &'a str,
}

pub struct RevisionRequest<'a> {
    pub domain: &'a str,
    pub source_text: &'a str,
    pub question: &'a str,
    pub answer: &'a str,
    pub feedback: &'a str,
}

pub struct PolicyRepairRequest<'a> {
    pub model: &'a PolicyModel,
    pub rule_id: &'a str,
    pub feedback: &'a str,
}

/// A language backend. Implementations must be safe to call concurrently.
pub trait Translator: Send + Sync {
    fn name(&self) -> &str;

    fn translate_claims(&self, text: &str, model: &PolicyModel) -> Result<RawTranslation, TranslatorError>;

    /// Returns a script of new declarations (each `declare-const` followed
    /// by a `; description` comment) and assertions.
    fn formalize_span(&self, span: &str, context: &PolicyModel) -> Result<String, TranslatorError>;

    fn repair(&self, request: &RepairRequest<'_>) -> Result<String, TranslatorError>;

    fn revise_answer(&self, request: &RevisionRequest<'_>) -> Result<String, TranslatorError>;

    /// Returns a script whose assertions replace the named rule.
    fn repair_policy(&self, request: &PolicyRepairRequest<'_>) -> Result<String, TranslatorError>;
}

/// `k` independent backends used for redundant translation.
#[derive(Clone)]
pub struct TranslatorPool {
    backends: Vec<Arc<dyn Translator>>,
}

impl fmt::Debug for TranslatorPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.backends.iter().map(|b| b.name())).finish()
    }
}

impl TranslatorPool {
    pub fn new(backends: Vec<Arc<dyn Translator>>) -> Self {
        assert!(!backends.is_empty(), "a pool needs at least one backend");
        Self { backends }
    }

    pub fn k(&self) -> usize {
        self.backends.len()
    }

    pub fn backends(&self) -> &[Arc<dyn Translator>] {
        &self.backends
    }

    pub fn first(&self) -> &dyn Translator {
        self.backends[0].as_ref()
    }

    /// Gated translations from every backend, in pool order, computed
    /// concurrently.
    pub fn translate_all(
        &self,
        text: &str,
        model: &PolicyModel,
        budget: usize,
    ) -> Vec<Result<Translation, TranslatorError>> {
        std::thread::scope(|s| {
            let handles: Vec<_> = self
                .backends
                .iter()
                .map(|b| s.spawn(move || translate_claims(text, model, b.as_ref(), budget)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("translator thread panicked")).collect()
        })
    }
}

/// The model's vocabulary as declarations with descriptions, no rules.
pub fn vocabulary(model: &PolicyModel) -> String {
    let mut decls = model.clone();
    decls.rules.clear();
    decls.to_smtlib()
}

/// Runs `check` on `output`, asking the backend for repairs up to `budget`
/// times. Diagnostics of every failed attempt are kept.
pub fn repair<T>(
    output: String,
    kind: RepairKind,
    context: &str,
    backend: &dyn Translator,
    budget: usize,
    check: impl Fn(&str) -> Result<T, String>,
) -> Result<(T, usize), TranslatorError> {
    let initial = match check(&output) {
        Ok(v) => return Ok((v, 0)),
        Err(d) => d,
    };
    let mut attempts = Vec::new();
    let (mut current, mut diagnostic) = (output, initial.clone());
    for n in 1..=budget {
        current = backend.repair(&RepairRequest { kind, output: &current, diagnostic: &diagnostic, context })?;
        match check(&current) {
            Ok(v) => return Ok((v, n)),
            Err(d) => {
                attempts.push(d.clone());
                diagnostic = d;
            }
        }
    }
    Err(TranslatorError::MalformedOutput { initial, attempts })
}

/// Parses `(claim P C)`; an empty premise may be written `true`.
pub fn parse_claim(text: &str, env: &Env) -> Result<(Term, Term), String> {
    let mut reader = Reader::new(text);
    let expr = reader.next_expr().map_err(|e| e.to_string())?.ok_or("empty claim")?;
    if !reader.at_end() {
        return Err("unexpected text after the claim".into());
    }
    let items = match &expr {
        SExpr::List(items, _) if items.len() == 3 && items[0].as_symbol() == Some("claim") => items,
        _ => return Err(format!("expected (claim <premise> <conclusion>), got `{expr}`")),
    };
    let part = |e: &SExpr, what: &str| parse_formula(&e.to_string(), env).map_err(|err| format!("{what} `{e}`: {err}"));
    Ok((part(&items[1], "premise")?, part(&items[2], "conclusion")?))
}

/// Translates text into gated claim pairs with one backend.
pub fn translate_claims(
    text: &str,
    model: &PolicyModel,
    backend: &dyn Translator,
    budget: usize,
) -> Result<Translation, TranslatorError> {
    if text.trim().is_empty() {
        return Ok(Translation::default());
    }
    let env = model.env().map_err(|e| TranslatorError::BackendUnavailable(format!("unusable model: {e}")))?;
    let raw = backend.translate_claims(text, model)?;
    let vocab = vocabulary(model);
    let mut out = Translation { pairs: Vec::new(), untranslatable: raw.untranslatable };
    for claim in raw.claims {
        let ((premise, conclusion), _) =
            repair(claim, RepairKind::Claim, &vocab, backend, budget, |t| parse_claim(t, &env))?;
        out.pairs.push(ClaimPair { premise, conclusion, confidence: None, source_text: text.to_string() });
    }
    Ok(out)
}

/// A gated span formalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanOutcome {
    pub unit: PolicyUnit,
    pub repairs: usize,
}

/// Builds a locally well-formed unit from a span script. Context names the
/// script uses are copied into the unit rather than re-declared.
pub fn unit_from_script(
    text: &str,
    context: &PolicyModel,
    rule_prefix: &str,
    provenance: Option<&str>,
) -> Result<PolicyUnit, String> {
    let ctx_env = context.env().map_err(|e| e.to_string())?;
    let (script, env) = parse_script_in(text, &ctx_env).map_err(|e| e.to_string())?;
    let mut unit = PolicyUnit::default();
    for d in &script.declarations {
        match d {
            crate::logic::Declaration::Datatype(dt) => unit.datatypes.push(dt.clone()),
            crate::logic::Declaration::Const { name, sort } => {
                let desc = script
                    .descriptions
                    .get(name)
                    .ok_or_else(|| format!("declaration of `{name}` lacks a `; description` comment"))?;
                unit.variables.push(VariableSpec::new(name.clone(), sort.clone(), desc.clone()));
            }
        }
    }
    let declared: BTreeSet<String> = unit.variables.iter().map(|v| v.name.clone()).collect();
    let mut used_types: BTreeSet<String> = BTreeSet::new();
    let mut borrowed = BTreeSet::new();
    for t in &script.assertions {
        for v in t.free_vars() {
            if !declared.contains(&v) {
                borrowed.insert(v);
            }
        }
        collect_constructor_types(t, &env, &mut used_types);
    }
    borrowed.extend(script.reused.iter().filter(|n| context.variable(n).is_some()).cloned());
    for v in &context.variables {
        if borrowed.contains(&v.name) {
            unit.variables.push(v.clone());
        }
    }
    for v in &unit.variables {
        if let Sort::Datatype(dt) = &v.sort {
            used_types.insert(dt.clone());
        }
    }
    for dt in &context.datatypes {
        if used_types.contains(&dt.name) && !unit.datatypes.iter().any(|d| d.name == dt.name) {
            unit.datatypes.push(dt.clone());
        }
    }
    unit.rules = script
        .assertions
        .into_iter()
        .enumerate()
        .map(|(i, term)| Rule {
            id: format!("{rule_prefix}{}", i + 1),
            term,
            provenance: provenance.map(str::to_string),
        })
        .collect();
    unit.validate().map_err(|e| e.to_string())?;
    Ok(unit)
}

fn collect_constructor_types(t: &Term, env: &Env, out: &mut BTreeSet<String>) {
    if let Term::Constructor(c) = t {
        if let Some(dt) = env.constructor_datatype(c) {
            out.insert(dt.to_string());
        }
    }
    for c in t.children() {
        collect_constructor_types(c, env, out);
    }
}

/// Formalizes one span into a policy unit with one backend.
pub fn formalize_span(
    span: &str,
    context: &PolicyModel,
    backend: &dyn Translator,
    budget: usize,
    rule_prefix: &str,
    provenance: Option<&str>,
) -> Result<SpanOutcome, TranslatorError> {
    if span.trim().is_empty() {
        return Ok(SpanOutcome { unit: PolicyUnit::default(), repairs: 0 });
    }
    let raw = backend.formalize_span(span, context)?;
    let ctx = format!("{}\n; span:\n; {}", vocabulary(context), span.replace('\n', "\n; "));
    let (unit, repairs) = repair(raw, RepairKind::Span, &ctx, backend, budget, |t| {
        unit_from_script(t, context, rule_prefix, provenance)
    })?;
    Ok(SpanOutcome { unit, repairs })
}

/// Asks the backend to rewrite an answer given rendered feedback.
pub fn revise_answer(backend: &dyn Translator, request: &RevisionRequest<'_>) -> Result<String, TranslatorError> {
    let text = backend.revise_answer(request)?;
    if text.trim().is_empty() {
        return Err(TranslatorError::MalformedOutput { initial: "empty revision".into(), attempts: Vec::new() });
    }
    Ok(text.trim().to_string())
}
