//! Dataset evaluation and the answer revision loop.

mod metrics;
mod refine;

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::PolicyModel;
use crate::solver::Solver;
use crate::translator::{Confidence, TranslatorPool};
use crate::verifier::{findings_json, overall_category, qa_text, validate, Category, Finding, VerifierConfig};

pub use metrics::{compute_metrics, ConfusionCounts, MetricsRow, Percent};
pub use refine::{run_refine_loop, RefineConfig, RefineStep, DEFAULT_MAX_ITERS};

/// How several findings for one answer become one binary verdict.
pub const BINARIZATION: &str = "valid iff at least one claim pair was found and every pair finding is VALID";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no cases to compute metrics over")]
    EmptyCounts,
    #[error("dataset {path}: {message}")]
    DatasetFormat { path: String, message: String },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetCase {
    pub question: String,
    pub answer: String,
    pub label: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document_ref: Option<String>,
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetCase>, EvalError> {
    let err = |message: String| EvalError::DatasetFormat { path: path.display().to_string(), message };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

/// Whether findings count as an approval.
pub fn predicted_valid(findings: &[Finding]) -> bool {
    let pairs: Vec<&Finding> = findings.iter().filter(|f| f.pair.is_some()).collect();
    !pairs.is_empty() && pairs.iter().all(|f| f.category == Category::Valid)
}

#[derive(Debug, Clone)]
pub struct CaseLog {
    pub index: usize,
    pub label: Category,
    pub verdict: Category,
    pub predicted_valid: bool,
    pub findings: Vec<Finding>,
    /// A fault that kept the case from being verified; counted as not valid.
    pub error: Option<String>,
}

impl Serialize for CaseLog {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_json::json!({
            "index": self.index,
            "label": self.label,
            "verdict": self.verdict,
            "predicted_valid": self.predicted_valid,
            "error": self.error,
            "findings": findings_json(&self.findings),
        })
        .serialize(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub threshold: Confidence,
    pub binarization: &'static str,
    pub counts: ConfusionCounts,
    pub metrics: Option<MetricsRow>,
    pub cases: Vec<CaseLog>,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub verifier: VerifierConfig,
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { verifier: VerifierConfig::default(), workers: 1 }
    }
}

fn run_case(
    index: usize,
    case: &DatasetCase,
    model: &PolicyModel,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &VerifierConfig,
) -> CaseLog {
    match validate(&qa_text(&case.question, &case.answer), model, pool, solver, config) {
        Ok(findings) => CaseLog {
            index,
            label: case.label,
            verdict: overall_category(&findings),
            predicted_valid: predicted_valid(&findings),
            findings,
            error: None,
        },
        Err(e) => CaseLog {
            index,
            label: case.label,
            verdict: Category::TooComplex,
            predicted_valid: false,
            findings: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Verifies every case with up to `config.workers` threads. Logs come back
/// in input order.
pub fn run_eval(
    cases: &[DatasetCase],
    model: &PolicyModel,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &EvalConfig,
) -> EvalReport {
    let next = AtomicUsize::new(0);
    let logs: Mutex<Vec<Option<CaseLog>>> = Mutex::new(vec![None; cases.len()]);
    std::thread::scope(|scope| {
        for _ in 0..config.workers.clamp(1, cases.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(case) = cases.get(i) else { break };
                let log = run_case(i, case, model, pool, solver, &config.verifier);
                logs.lock().expect("no panics while holding the lock")[i] = Some(log);
            });
        }
    });
    let cases_out: Vec<CaseLog> =
        logs.into_inner().expect("workers finished").into_iter().map(|l| l.expect("every case ran")).collect();
    let mut counts = ConfusionCounts::default();
    for log in &cases_out {
        counts.record(log.predicted_valid, log.label == Category::Valid);
    }
    EvalReport {
        threshold: config.verifier.threshold,
        binarization: BINARIZATION,
        counts,
        metrics: compute_metrics(&counts).ok(),
        cases: cases_out,
    }
}

/// One evaluation per threshold, in the given order.
pub fn threshold_sweep(
    cases: &[DatasetCase],
    model: &PolicyModel,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &EvalConfig,
    thresholds: &[Confidence],
) -> Vec<EvalReport> {
    thresholds
        .iter()
        .map(|t| {
            let mut c = config.clone();
            c.verifier.threshold = *t;
            run_eval(cases, model, pool, solver, &c)
        })
        .collect()
}
