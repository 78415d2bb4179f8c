//! Satisfiability, entailment, models and unsat cores through an external
//! SMT-LIB2 solver process.
//!
//! Every query starts from `(reset)`: declarations, named assertions,
//! `check-sat`, then a model, core or reason depending on the answer.
//! Sessions are pooled; a session that stops responding is killed.

mod reply;
mod session;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::logic::{Assignment, Env, LogicError, Term, Value};
use crate::policy::{ModelError, PolicyModel};
use session::{Request, Session};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub binary: String,
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Extra wall-clock allowance before an unresponsive process is killed.
    pub grace: Duration,
    pub logic: String,
    /// Shrink unsat cores by deletion before reporting them.
    pub minimize_cores: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            binary: "z3".into(),
            args: vec!["-in".into()],
            timeout: Duration::from_secs(10),
            grace: Duration::from_secs(5),
            logic: "QF_NRIA".into(),
            minimize_cores: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{binary}`: {source}")]
    Spawn { binary: String, source: std::io::Error },
    #[error("solver crashed: {detail}\n{stderr}")]
    Crash { detail: String, stderr: String },
    #[error("unexpected solver reply ({detail}): {reply}")]
    Protocol { reply: String, detail: String },
    #[error("query does not fit the model: {0}")]
    Model(#[from] ModelError),
    #[error("ill-sorted query term: {0}")]
    Term(#[from] LogicError),
}

/// Name of an assertion sent to the solver.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Rule(String),
    /// Index into the extra terms of a query.
    Extra(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Rule(id) => write!(f, "rule:{id}"),
            Label::Extra(i) => write!(f, "extra:{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// A total assignment over the model's declared variables.
    Sat(Assignment),
    /// The core is empty unless one was requested.
    Unsat(BTreeSet<Label>),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entailment {
    Yes(BTreeSet<Label>),
    No(Assignment),
    Unknown(String),
}

/// Which model rules a query asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rules<'a> {
    All,
    None,
    Only(&'a [String]),
}

#[derive(Debug, Clone)]
pub struct Query<'a> {
    pub model: &'a PolicyModel,
    pub rules: Rules<'a>,
    pub extra: Vec<Term>,
    pub want_core: bool,
    pub timeout: Option<Duration>,
}

impl<'a> Query<'a> {
    pub fn new(model: &'a PolicyModel, extra: Vec<Term>) -> Self {
        Self { model, rules: Rules::All, extra, want_core: false, timeout: None }
    }

    pub fn rules(mut self, rules: Rules<'a>) -> Self {
        self.rules = rules;
        self
    }

    pub fn core(mut self) -> Self {
        self.want_core = true;
        self
    }

    pub fn timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }
}

struct Inner {
    config: SolverConfig,
    pool: Mutex<Vec<Session>>,
}

/// Cheap-to-clone handle. Clones share the session pool; a recording
/// handle additionally appends every exchange to its transcript.
#[derive(Clone)]
pub struct Solver {
    inner: Arc<Inner>,
    transcript: Option<Arc<Mutex<String>>>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver").field("config", &self.inner.config).finish()
    }
}

const RULE_PREFIX: &str = "rule!";
const EXTRA_PREFIX: &str = "extra!";

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Self { inner: Arc::new(Inner { config, pool: Mutex::new(Vec::new()) }), transcript: None }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.inner.config
    }

    /// A handle that records its traffic into a fresh transcript.
    pub fn recording(&self) -> Solver {
        Solver { inner: Arc::clone(&self.inner), transcript: Some(Arc::new(Mutex::new(String::new()))) }
    }

    pub fn transcript(&self) -> Option<String> {
        self.transcript.as_ref().map(|t| t.lock().unwrap().clone())
    }

    /// Checks the model's rules together with `extra`.
    pub fn check(&self, model: &PolicyModel, extra: &[Term], want_core: bool) -> Result<Verdict, SolverError> {
        let mut q = Query::new(model, extra.to_vec());
        q.want_core = want_core;
        self.run(&q)
    }

    /// Whether `model ∧ hypotheses ⊨ consequence`.
    pub fn entails(
        &self,
        model: &PolicyModel,
        hypotheses: &Term,
        consequence: &Term,
    ) -> Result<Entailment, SolverError> {
        let q = Query::new(model, vec![hypotheses.clone(), Term::not(consequence.clone())]).core();
        self.entails_query(&q)
    }

    /// Interprets a query whose extras encode `hypotheses ∧ ¬consequence`.
    pub fn entails_query(&self, q: &Query<'_>) -> Result<Entailment, SolverError> {
        Ok(match self.run(q)? {
            Verdict::Unsat(core) => Entailment::Yes(core),
            Verdict::Sat(a) => Entailment::No(a),
            Verdict::Unknown(r) => Entailment::Unknown(r),
        })
    }

    pub fn run(&self, q: &Query<'_>) -> Result<Verdict, SolverError> {
        let env = q.model.env()?;
        for t in &q.extra {
            env.check_formula(t)?;
        }
        let rules: Vec<(&str, &Term)> = match q.rules {
            Rules::All => q.model.rules.iter().map(|r| (r.id.as_str(), &r.term)).collect(),
            Rules::None => Vec::new(),
            Rules::Only(ids) => {
                q.model.rules.iter().filter(|r| ids.contains(&r.id)).map(|r| (r.id.as_str(), &r.term)).collect()
            }
        };
        let verdict = self.raw(q.model, &env, &rules, &q.extra, q.want_core, q.timeout)?;
        match verdict {
            Verdict::Unsat(core) if q.want_core && self.inner.config.minimize_cores && core.len() > 1 => {
                self.minimize(q.model, &env, &rules, &q.extra, core, q.timeout)
            }
            v => Ok(v),
        }
    }

    /// Deletion-based shrinking: drop each label in turn and keep it out
    /// whenever the rest stays unsat.
    fn minimize(
        &self,
        model: &PolicyModel,
        env: &Env,
        rules: &[(&str, &Term)],
        extra: &[Term],
        core: BTreeSet<Label>,
        timeout: Option<Duration>,
    ) -> Result<Verdict, SolverError> {
        let mut kept: Vec<Label> = core.into_iter().collect();
        let mut i = 0;
        while i < kept.len() {
            let trial: Vec<Label> = kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, l)| l.clone()).collect();
            let sub_rules: Vec<(&str, &Term)> =
                rules.iter().filter(|(id, _)| trial.contains(&Label::Rule(id.to_string()))).copied().collect();
            // Extras keep their indices so labels stay stable.
            let sub_extra: Vec<(usize, &Term)> =
                extra.iter().enumerate().filter(|(j, _)| trial.contains(&Label::Extra(*j))).collect();
            match self.raw_indexed(model, env, &sub_rules, &sub_extra, false, timeout)? {
                Verdict::Unsat(_) => {
                    kept.remove(i);
                }
                _ => i += 1,
            }
        }
        Ok(Verdict::Unsat(kept.into_iter().collect()))
    }

    fn raw(
        &self,
        model: &PolicyModel,
        env: &Env,
        rules: &[(&str, &Term)],
        extra: &[Term],
        want_core: bool,
        timeout: Option<Duration>,
    ) -> Result<Verdict, SolverError> {
        let indexed: Vec<(usize, &Term)> = extra.iter().enumerate().collect();
        self.raw_indexed(model, env, rules, &indexed, want_core, timeout)
    }

    fn raw_indexed(
        &self,
        model: &PolicyModel,
        env: &Env,
        rules: &[(&str, &Term)],
        extra: &[(usize, &Term)],
        want_core: bool,
        timeout: Option<Duration>,
    ) -> Result<Verdict, SolverError> {
        let config = &self.inner.config;
        let timeout = timeout.unwrap_or(config.timeout);
        let preamble = format!(
            "(set-option :produce-models true)\n(set-option :produce-unsat-cores true)\n\
             (set-option :timeout {})\n(set-logic {})\n",
            timeout.as_millis(),
            config.logic
        );
        let mut body = String::new();
        for d in model.declarations() {
            body.push_str(&format!("{d}\n"));
        }
        for (i, (_, t)) in rules.iter().enumerate() {
            body.push_str(&format!("(assert (! {t} :named {RULE_PREFIX}{i}))\n"));
        }
        for (i, t) in extra {
            body.push_str(&format!("(assert (! {t} :named {EXTRA_PREFIX}{i}))\n"));
        }
        let req =
            Request { preamble: &preamble, body: &body, want_model: true, want_core, timeout, grace: config.grace };

        let mut session = match self.inner.pool.lock().unwrap().pop() {
            Some(s) => s,
            None => Session::spawn(config)?,
        };
        let mut transcript = String::new();
        let outcome = session.query(&req, &mut transcript);
        if let Some(t) = &self.transcript {
            t.lock().unwrap().push_str(&transcript);
        }
        let Some(reply) = outcome? else {
            return Ok(Verdict::Unknown(format!(
                "solver unresponsive after {} ms; process killed",
                timeout.as_millis()
            )));
        };
        self.inner.pool.lock().unwrap().push(session);

        let protocol = |reply: &str, detail: String| SolverError::Protocol { reply: reply.to_string(), detail };
        match reply.status.as_str() {
            "sat" => {
                let text = reply.payload.unwrap_or_default();
                let values = reply::parse_model(&text, env).map_err(|e| protocol(&text, e))?;
                Ok(Verdict::Sat(total_assignment(env, values)))
            }
            "unsat" => {
                let mut core = BTreeSet::new();
                if let Some(text) = reply.payload {
                    for label in reply::parse_core(&text).map_err(|e| protocol(&text, e))? {
                        core.insert(
                            decode_label(&label, rules, extra)
                                .ok_or_else(|| protocol(&text, format!("core label `{label}` was never sent")))?,
                        );
                    }
                }
                Ok(Verdict::Unsat(core))
            }
            _ => Ok(Verdict::Unknown(reply.payload.map(|p| reply::parse_reason(&p)).unwrap_or_default())),
        }
    }
}

fn decode_label(label: &str, rules: &[(&str, &Term)], extra: &[(usize, &Term)]) -> Option<Label> {
    if let Some(i) = label.strip_prefix(RULE_PREFIX) {
        let (id, _) = rules.get(i.parse::<usize>().ok()?)?;
        return Some(Label::Rule(id.to_string()));
    }
    let i: usize = label.strip_prefix(EXTRA_PREFIX)?.parse().ok()?;
    extra.iter().any(|(j, _)| *j == i).then_some(Label::Extra(i))
}

/// Completes a solver model over every declared constant, flagging the
/// defaults it had to invent.
fn total_assignment(env: &Env, mut values: std::collections::BTreeMap<String, Value>) -> Assignment {
    let mut a = Assignment::new();
    for (name, sort) in env.consts() {
        match values.remove(name) {
            Some(v) => {
                a.bindings.insert(name.to_string(), v);
            }
            None => {
                let first = match sort {
                    crate::logic::Sort::Datatype(dt) => env.datatype(dt).and_then(|cs| cs.first()).map(String::as_str),
                    _ => None,
                };
                a.bindings.insert(name.to_string(), Value::default_for(sort, first));
                a.arbitrary.insert(name.to_string());
            }
        }
    }
    a
}
