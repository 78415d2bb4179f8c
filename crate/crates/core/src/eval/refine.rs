//! Revising an answer until it verifies.

use serde::Serialize;

use crate::policy::PolicyModel;
use crate::solver::Solver;
use crate::translator::{revise_answer, RevisionRequest, TranslatorPool};
use crate::verifier::{
    findings_json, overall_category, qa_text, render_feedback, validate, Category, Finding, VerifierConfig,
};

use super::{predicted_valid, EvalError};

pub const DEFAULT_MAX_ITERS: usize = 10;

#[derive(Debug, Clone)]
pub struct RefineConfig {
    pub verifier: VerifierConfig,
    pub max_iters: usize,
    /// A few words naming the policy's subject, for the revision prompt.
    pub domain: String,
    /// The policy text the answer should follow, if available.
    pub source_text: String,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            verifier: VerifierConfig::default(),
            max_iters: DEFAULT_MAX_ITERS,
            domain: String::new(),
            source_text: String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefineStep {
    pub answer: String,
    pub category: Category,
    pub findings: Vec<Finding>,
    /// The feedback handed to the reviser after this step, if any.
    pub feedback: Option<String>,
    /// A fault that ended the loop at this step.
    pub error: Option<String>,
}

impl Serialize for RefineStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_json::json!({
            "answer": self.answer,
            "category": self.category,
            "feedback": self.feedback,
            "error": self.error,
            "findings": findings_json(&self.findings),
        })
        .serialize(s)
    }
}

/// Validates `answer`, and while it does not verify asks the pool's first
/// backend for a revision, up to `config.max_iters` validations in all.
/// Faults end the trajectory early and are recorded on its last step.
pub fn run_refine_loop(
    question: &str,
    answer: &str,
    model: &PolicyModel,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &RefineConfig,
) -> Result<Vec<RefineStep>, EvalError> {
    if config.max_iters == 0 {
        return Err(EvalError::InvalidArgument("max_iters must be at least 1".into()));
    }
    let mut steps: Vec<RefineStep> = Vec::new();
    let mut current = answer.trim().to_string();
    for i in 0..config.max_iters {
        let findings = match validate(&qa_text(question, &current), model, pool, solver, &config.verifier) {
            Ok(f) => f,
            Err(e) => {
                steps.push(RefineStep {
                    answer: current,
                    category: Category::TooComplex,
                    findings: Vec::new(),
                    feedback: None,
                    error: Some(e.to_string()),
                });
                break;
            }
        };
        let category = overall_category(&findings);
        let done = predicted_valid(&findings) || i + 1 == config.max_iters;
        let mut step = RefineStep { answer: current.clone(), category, findings, feedback: None, error: None };
        if done {
            steps.push(step);
            break;
        }
        let feedback = step.findings.iter().map(|f| render_feedback(f, model)).collect::<Vec<_>>().join("\n\n");
        let request = RevisionRequest {
            domain: &config.domain,
            source_text: &config.source_text,
            question,
            answer: &current,
            feedback: &feedback,
        };
        step.feedback = Some(feedback.clone());
        match revise_answer(pool.first(), &request) {
            Ok(revised) => {
                steps.push(step);
                current = revised;
            }
            Err(e) => {
                step.error = Some(e.to_string());
                steps.push(step);
                break;
            }
        }
    }
    Ok(steps)
}
