//! `policyguard`: build, vet and query policy models from the shell.
//!
//! Exit status is 0 on success, 1 when a check ran and did not pass, and 2
//! on usage or runtime errors.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use policyguard::eval::{load_dataset, predicted_valid, run_refine_loop, threshold_sweep, EvalConfig, RefineConfig};
use policyguard::formalizer::{self, BuildError};
use policyguard::policy::{self, PolicyModel};
use policyguard::solver::Solver;
use policyguard::translator::{Confidence, TranslatorPool};
use policyguard::verifier::{findings_json, overall_category, qa_text, render_feedback, validate, VerifierConfig};
use policyguard::vetting::{
    generate_symbolic_tests, lint, load_suite, render_structured_english, repair_from_feedback, run_tests, save_suite,
    stamp, GeneratorConfig,
};
use serde_json::json;

use config::{parse_threshold, Config};

#[derive(Parser)]
#[command(name = "policyguard", version, about = "Check natural-language answers against a formal policy model")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `scripted:<dir>` or `http`.
    #[arg(long, global = true)]
    translator: Option<String>,
    /// Path to the SMT solver binary.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Per-query solver timeout.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Formalize a policy document into a model.
    Build {
        document: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write the per-span build report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        target_tokens: Option<usize>,
        #[arg(long)]
        fail_fast: bool,
    },
    /// Report contradictions, dead rules and other model defects.
    Lint {
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print rules as structured English.
    Render {
        model: PathBuf,
        #[arg(long)]
        rule: Option<String>,
    },
    /// Verify an answer against the model.
    Validate {
        model: PathBuf,
        #[command(flatten)]
        input: QaInput,
        #[arg(long)]
        threshold: Option<String>,
        /// Write SMT-LIB transcripts of every solver call here.
        #[arg(long)]
        audit_dir: Option<PathBuf>,
        /// Print plain-text feedback for every finding.
        #[arg(long)]
        explain: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a test suite and optionally stamp the model as vetted.
    Test {
        model: PathBuf,
        suite: PathBuf,
        /// Who is vetting; required to stamp.
        #[arg(long)]
        stamp_by: Option<String>,
        /// Write the stamped model here when lint and every case pass.
        #[arg(long, requires = "stamp_by")]
        stamp_out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Generate symbolic test cases from the model.
    GenTests {
        model: PathBuf,
        #[arg(short = 'n', long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rewrite one rule from reviewer feedback.
    Repair {
        model: PathBuf,
        #[arg(long)]
        rule: String,
        #[arg(long)]
        feedback: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 3)]
        budget: usize,
    },
    /// Score the verifier on a labelled dataset.
    Eval {
        model: PathBuf,
        dataset: PathBuf,
        /// Repeat to sweep several thresholds.
        #[arg(long)]
        threshold: Vec<String>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write per-case logs and metrics (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revise an answer until it verifies.
    Refine {
        model: PathBuf,
        #[command(flatten)]
        input: QaInput,
        #[arg(long, default_value_t = policyguard::eval::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value = "")]
        domain: String,
        /// Policy document to show the reviser.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Convert a build report to CSV.
    Report { build_report: PathBuf },
}

#[derive(Args)]
struct QaInput {
    /// JSON file with `question` and `answer` fields.
    #[arg(long, conflicts_with_all = ["question", "answer"])]
    qa: Option<PathBuf>,
    #[arg(long, requires = "answer")]
    question: Option<String>,
    #[arg(long)]
    answer: Option<String>,
}

impl QaInput {
    fn read(&self) -> Result<(String, String)> {
        if let Some(path) = &self.qa {
            let v: serde_json::Value =
                serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            let field = |k: &str| {
                v[k].as_str().map(str::to_string).with_context(|| format!("{}: missing `{k}`", path.display()))
            };
            return Ok((field("question")?, field("answer")?));
        }
        match (&self.question, &self.answer) {
            (q, Some(a)) => Ok((q.clone().unwrap_or_default(), a.clone())),
            _ => bail!("give --qa FILE or --answer (with an optional --question)"),
        }
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<PolicyModel> {
    policy::load(path).context("loading model")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

struct Env {
    config: Config,
    translator: Option<String>,
    solver: Solver,
}

impl Env {
    fn new(cli: &Cli) -> Result<Self> {
        let mut config = Config::load(cli.config.as_deref())?;
        if let Some(s) = &cli.solver {
            config.solver.binary = Some(s.clone());
        }
        if let Some(ms) = cli.timeout_ms {
            config.solver.timeout_ms = Some(ms);
        }
        let solver = Solver::new(config.solver());
        Ok(Self { translator: cli.translator.clone(), solver, config })
    }

    fn pool(&self) -> Result<TranslatorPool> {
        self.config.pool(self.translator.as_deref())
    }

    fn has_translator(&self) -> bool {
        self.translator.is_some() || self.config.translator.backend.is_some()
    }

    fn verifier(&self, threshold: Option<&str>) -> Result<VerifierConfig> {
        let mut v = self.config.verifier()?;
        if let Some(t) = threshold {
            v.threshold = parse_threshold(t)?;
        }
        Ok(v)
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let env = Env::new(&cli)?;
    match cli.command {
        Command::Build { document, output, report, target_tokens, fail_fast } => {
            let mut config = env.config.build();
            if let Some(n) = target_tokens {
                config.target_span_tokens = n;
            }
            config.fail_fast |= fail_fast;
            let doc = read(&document)?;
            let (model, rep) = match formalizer::build(&doc, &env.pool()?, &env.solver, &config) {
                Ok(r) => r,
                Err(BuildError::BuildFailed(failures)) => {
                    for f in &failures {
                        eprintln!("span {} failed: {}", f.index + 1, f.error);
                    }
                    return Ok(Outcome::Fail);
                }
                Err(e) => return Err(e.into()),
            };
            policy::save(&model, &output)?;
            if let Some(path) = report {
                write(&path, &rep.to_json())?;
            }
            for s in &rep.spans {
                if let formalizer::SpanStatus::Failed { error } = &s.status {
                    eprintln!("span {} skipped: {error}", s.index + 1);
                }
            }
            eprintln!(
                "{} span(s), {} failed; {} datatype(s), {} variable(s), {} rule(s)",
                rep.spans.len(),
                rep.failed_spans,
                rep.counts.datatypes,
                rep.counts.variables,
                rep.counts.rules
            );
            Ok(if rep.failed_spans == 0 { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Lint { model, json } => {
            let m = load_model(&model)?;
            let report = lint(&m, &env.solver)?;
            if json {
                print_json(&serde_json::to_value(&report)?);
            } else {
                for item in report.items() {
                    println!("{item}");
                }
                println!("{} error(s), {} warning(s)", report.errors.len(), report.warnings.len());
            }
            Ok(if report.has_errors() { Outcome::Fail } else { Outcome::Pass })
        }
        Command::Render { model, rule } => {
            let m = load_model(&model)?;
            let rules: Vec<_> = match &rule {
                Some(id) => vec![m.rule(id).with_context(|| format!("no rule `{id}`"))?],
                None => m.rules.iter().collect(),
            };
            for r in rules {
                println!("[{}] {}", r.id, render_structured_english(r, &m));
            }
            Ok(Outcome::Pass)
        }
        Command::Validate { model, input, threshold, audit_dir, explain, json } => {
            let m = load_model(&model)?;
            let (q, a) = input.read()?;
            let mut config = env.verifier(threshold.as_deref())?;
            if audit_dir.is_some() {
                config.audit_dir = audit_dir;
            }
            if let Some(dir) = &config.audit_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let text = if q.trim().is_empty() { a.trim().to_string() } else { qa_text(&q, &a) };
            let findings = validate(&text, &m, &env.pool()?, &env.solver, &config)?;
            let overall = overall_category(&findings);
            let valid = predicted_valid(&findings);
            if json {
                print_json(&json!({"category": overall, "valid": valid, "findings": findings_json(&findings)}));
            } else {
                println!("{overall}");
                if explain {
                    for f in &findings {
                        println!("\n{}", render_feedback(f, &m));
                    }
                }
            }
            Ok(if valid { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Test { model, suite, stamp_by, stamp_out, json } => {
            let m = load_model(&model)?;
            let cases = load_suite(&suite)?;
            let pool = if env.has_translator() { Some(env.pool()?) } else { None };
            let outcomes = run_tests(&cases, &m, pool.as_ref(), &env.solver, &env.verifier(None)?)?;
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            if json {
                let rows: Vec<_> = outcomes
                    .iter()
                    .enumerate()
                    .map(|(i, o)| {
                        json!({"case": o.case.label(i), "expected": o.case.expected, "actual": o.actual, "pass": o.pass, "note": o.note})
                    })
                    .collect();
                print_json(&json!(rows));
            } else {
                for (i, o) in outcomes.iter().enumerate() {
                    let mark = if o.pass { "PASS" } else { "FAIL" };
                    println!("{mark} {} expected {} got {}", o.case.label(i), o.case.expected, o.actual);
                    if let Some(n) = &o.note {
                        println!("     {n}");
                    }
                }
                println!("{} passed, {failed} failed", outcomes.len() - failed);
            }
            if let Some(out) = stamp_out {
                let report = lint(&m, &env.solver)?;
                let at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
                match stamp(&m, &report, &outcomes, stamp_by, Some(at), Some(suite.display().to_string())) {
                    Some(vetted) => {
                        policy::save(&vetted, &out)?;
                        eprintln!("vetted model written to {}", out.display());
                    }
                    None => {
                        eprintln!("not stamped: {} lint error(s), {failed} failing case(s)", report.errors.len());
                        return Ok(Outcome::Fail);
                    }
                }
            }
            Ok(if failed == 0 { Outcome::Pass } else { Outcome::Fail })
        }
        Command::GenTests { model, count, seed, output } => {
            let m = load_model(&model)?;
            let config = GeneratorConfig { count, seed, ..GeneratorConfig::default() };
            let generation = generate_symbolic_tests(&m, &config, &env.solver, &env.verifier(None)?)?;
            save_suite(&output, &generation.cases).with_context(|| format!("writing {}", output.display()))?;
            eprintln!(
                "{} case(s) written; {} dropped, {} undecided",
                generation.cases.len(),
                generation.dropped,
                generation.undecided
            );
            Ok(Outcome::Pass)
        }
        Command::Repair { model, rule, feedback, output, budget } => {
            let m = load_model(&model)?;
            let pool = env.pool()?;
            let repaired = repair_from_feedback(&m, &rule, &feedback, pool.first(), &env.solver, budget)?;
            policy::save(&repaired, &output)?;
            for r in repaired.rules.iter().filter(|r| r.id == rule || r.id.starts_with(&format!("{rule}."))) {
                println!("[{}] {}", r.id, render_structured_english(r, &repaired));
            }
            Ok(Outcome::Pass)
        }
        Command::Eval { model, dataset, threshold, workers, out } => {
            let m = load_model(&model)?;
            let cases = load_dataset(&dataset)?;
            let verifier = env.verifier(None)?;
            let thresholds: Vec<Confidence> = if threshold.is_empty() {
                vec![verifier.threshold]
            } else {
                threshold.iter().map(|t| parse_threshold(t)).collect::<Result<_>>()?
            };
            let config = EvalConfig { verifier, workers };
            let reports = threshold_sweep(&cases, &m, &env.pool()?, &env.solver, &config, &thresholds);
            for r in &reports {
                let c = &r.counts;
                let metrics = r.metrics.as_ref().map(|m| m.to_string()).unwrap_or_else(|| "no cases".into());
                println!("threshold {} TP {} FP {} TN {} FN {} {metrics}", r.threshold, c.tp, c.fp, c.tn, c.fn_);
            }
            if let Some(path) = out {
                write(&path, &serde_json::to_string_pretty(&reports)?)?;
            }
            Ok(Outcome::Pass)
        }
        Command::Refine { model, input, max_iters, domain, source, json } => {
            let m = load_model(&model)?;
            let (q, a) = input.read()?;
            let source_text = source.as_deref().map(read).transpose()?.unwrap_or_default();
            let config = RefineConfig { verifier: env.verifier(None)?, max_iters, domain, source_text };
            let steps = run_refine_loop(&q, &a, &m, &env.pool()?, &env.solver, &config)?;
            let done = steps.last().is_some_and(|s| predicted_valid(&s.findings));
            if json {
                print_json(&serde_json::to_value(&steps)?);
            } else {
                for (i, s) in steps.iter().enumerate() {
                    println!("step {}: {}\n  {}", i + 1, s.category, s.answer);
                    if let Some(e) = &s.error {
                        println!("  error: {e}");
                    }
                }
            }
            Ok(if done { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Report { build_report } => {
            let v: serde_json::Value = serde_json::from_str(&read(&build_report)?)
                .with_context(|| format!("parsing {}", build_report.display()))?;
            let spans = v["spans"].as_array().context("build report has no `spans` array")?;
            println!("span,datatypes,variables,rules");
            for s in spans {
                let n = |k: &str| s["counts"][k].as_u64().with_context(|| format!("span without counts.{k}"));
                let index = s["index"].as_u64().context("span without index")?;
                println!("{},{},{},{}", index + 1, n("datatypes")?, n("variables")?, n("rules")?);
            }
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
