#![allow(dead_code)]

pub mod terms;

use std::path::PathBuf;
use std::sync::Arc;

use policyguard::logic::{parse_formula, Sort, Term};
use policyguard::policy::{self, PolicyModel, Rule, VariableSpec};
use policyguard::solver::{Solver, SolverConfig};
use policyguard::translator::{
    PolicyRepairRequest, RawTranslation, RepairRequest, RevisionRequest, ScriptedTranslator, Translator,
    TranslatorError, TranslatorPool,
};
use policyguard::verifier::qa_text;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn model(name: &str) -> PolicyModel {
    policy::load(&fixtures_dir().join("models").join(format!("{name}.json"))).unwrap()
}

/// Boolean variables described as "flag <name>" with rules `r0`, `r1`, ...
pub fn bools(names: &[&str], rules: &[&str]) -> PolicyModel {
    let mut m = PolicyModel::new();
    m.variables = names.iter().map(|n| VariableSpec::new(*n, Sort::Bool, format!("flag {n}"))).collect();
    let env = m.env().unwrap();
    m.rules =
        rules.iter().enumerate().map(|(i, t)| Rule::new(format!("r{i}"), parse_formula(t, &env).unwrap())).collect();
    m
}

pub fn scripted_pool(dir: &str) -> TranslatorPool {
    let backends = ScriptedTranslator::load_dir(&fixtures_dir().join("scripted").join(dir)).unwrap();
    TranslatorPool::new(backends.into_iter().map(|b| Arc::new(b) as Arc<dyn Translator>).collect())
}

/// The question-answer text of `fixtures/qa/<name>.json`.
pub fn qa(name: &str) -> String {
    let v = qa_json(name);
    qa_text(v["question"].as_str().unwrap(), v["answer"].as_str().unwrap())
}

pub fn qa_json(name: &str) -> serde_json::Value {
    let path = fixtures_dir().join("qa").join(format!("{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn solver() -> Solver {
    Solver::new(SolverConfig::default())
}

pub fn term(model: &PolicyModel, text: &str) -> Term {
    parse_formula(text, &model.env().unwrap()).unwrap()
}

/// A backend that answers every claim request with the same raw output.
pub struct Fixed(pub RawTranslation);

impl Translator for Fixed {
    fn name(&self) -> &str {
        "fixed"
    }
    fn translate_claims(&self, _: &str, _: &PolicyModel) -> Result<RawTranslation, TranslatorError> {
        Ok(self.0.clone())
    }
    fn formalize_span(&self, _: &str, _: &PolicyModel) -> Result<String, TranslatorError> {
        Err(TranslatorError::BackendUnavailable("fixed".into()))
    }
    fn repair(&self, _: &RepairRequest<'_>) -> Result<String, TranslatorError> {
        Err(TranslatorError::BackendUnavailable("fixed".into()))
    }
    fn revise_answer(&self, _: &RevisionRequest<'_>) -> Result<String, TranslatorError> {
        Err(TranslatorError::BackendUnavailable("fixed".into()))
    }
    fn repair_policy(&self, _: &PolicyRepairRequest<'_>) -> Result<String, TranslatorError> {
        Err(TranslatorError::BackendUnavailable("fixed".into()))
    }
}

/// One fixed backend per translation; each translation lists
/// `(premise, conclusion)` texts.
pub fn pool(translations: &[&[(&str, &str)]]) -> TranslatorPool {
    TranslatorPool::new(
        translations
            .iter()
            .map(|pairs| {
                let claims = pairs.iter().map(|(p, c)| format!("(claim {p} {c})")).collect();
                Arc::new(Fixed(RawTranslation { claims, untranslatable: vec![] })) as Arc<dyn Translator>
            })
            .collect(),
    )
}
