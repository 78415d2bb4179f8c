//! Test cases drawn from the model itself.
//!
//! Each case pins a few variables to values from a model of the rules
//! (sometimes perturbed) and asks about one held-out variable. The expected
//! category is whatever classification says, confirmed by a second,
//! differently phrased round of queries on a fresh solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::{Assignment, Op, Sort, Term, Value};
use crate::policy::PolicyModel;
use crate::solver::{Query, Solver, Verdict};
use crate::translator::{ClaimPair, Confidence};
use crate::verifier::{classify, Category, VerifierConfig};

use super::{Provenance, TestCase, TestKind, VetError};

const MUTATION_RATE: f64 = 0.25;
const MAX_PREMISE_VARS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub count: usize,
    pub seed: u64,
    /// Give up after this many draws per requested case.
    pub attempts_per_case: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { count: 100, seed: 0, attempts_per_case: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub cases: Vec<TestCase>,
    /// Draws the second round disagreed with or could not decide.
    pub dropped: usize,
    /// Draws whose classification was undecided.
    pub undecided: usize,
}

/// Perturbs a value so that it usually disagrees with the model.
fn mutate(value: &Value, sort: &Sort, constructors: &[String], rng: &mut ChaCha8Rng) -> Value {
    let step = if rng.gen_bool(0.5) { 1 } else { -1 };
    match (value, sort) {
        (Value::Bool(b), _) => Value::Bool(!b),
        (Value::Int(i), _) => Value::Int(i + BigInt::from(step)),
        (Value::Real(r), _) => Value::Real(r + BigRational::from_integer(step.into())),
        (Value::Constructor(c), _) => {
            let others: Vec<&String> = constructors.iter().filter(|k| *k != c).collect();
            match others.choose(rng) {
                Some(k) => Value::Constructor((*k).clone()),
                None => value.clone(),
            }
        }
        (Value::Opaque(_), _) => value.clone(),
    }
}

fn literal(name: &str, value: &Value) -> Option<Term> {
    Some(match value {
        Value::Bool(true) => Term::var(name),
        Value::Bool(false) => Term::not(Term::var(name)),
        other => Term::eq(Term::var(name), other.to_term()?),
    })
}

/// A conclusion about `name`, which the model may or may not force.
fn conclusion(name: &str, value: &Value, constructors: &[String], rng: &mut ChaCha8Rng) -> Option<Term> {
    let v = Term::var(name);
    match value {
        Value::Bool(b) => literal(name, &Value::Bool(if rng.gen_bool(0.5) { *b } else { !b })),
        Value::Constructor(c) => {
            let pick = if rng.gen_bool(0.5) { c.clone() } else { constructors.choose(rng)?.clone() };
            Some(Term::eq(v, Term::Constructor(pick)))
        }
        Value::Int(_) | Value::Real(_) => {
            let lit = value.to_term()?;
            Some(match rng.gen_range(0..4) {
                0 => Term::eq(v, lit),
                1 => Term::apply(Op::Le, v, lit),
                2 => Term::apply(Op::Gt, v, lit),
                _ => {
                    let one = match value {
                        Value::Int(i) => Value::Int(i + 1),
                        Value::Real(r) => Value::Real(r + BigRational::from_integer(1.into())),
                        _ => unreachable!(),
                    };
                    Term::eq(v, one.to_term()?)
                }
            })
        }
        Value::Opaque(_) => None,
    }
}

/// Excludes the exact, solver-chosen part of `a` from later draws.
fn blocking_clause(a: &Assignment) -> Option<Term> {
    let lits: Vec<Term> = a
        .bindings
        .iter()
        .filter(|(n, _)| !a.arbitrary.contains(*n))
        .filter_map(|(n, v)| Some(Term::eq(Term::var(n), v.to_term()?)))
        .collect();
    (!lits.is_empty()).then(|| Term::not(Term::and_all(lits)))
}

/// Classifies `(premise, conclusion)` with single conjoined queries and no
/// cores. `None` when the solver cannot decide.
fn reverify(
    model: &PolicyModel,
    premise: &Term,
    conclusion: &Term,
    solver: &Solver,
) -> Result<Option<Category>, VetError> {
    let sat = |t: Term| -> Result<Option<bool>, VetError> {
        Ok(match solver.run(&Query::new(model, vec![t]))? {
            Verdict::Sat(_) => Some(true),
            Verdict::Unsat(_) => Some(false),
            Verdict::Unknown(_) => None,
        })
    };
    let Some(consistent) = sat(premise.clone())? else { return Ok(None) };
    if !consistent {
        return Ok(Some(Category::Impossible));
    }
    let Some(can_fail) = sat(Term::and_all(vec![premise.clone(), Term::not(conclusion.clone())]))? else {
        return Ok(None);
    };
    if !can_fail {
        return Ok(Some(Category::Valid));
    }
    let Some(can_hold) = sat(Term::and_all(vec![premise.clone(), conclusion.clone()]))? else { return Ok(None) };
    Ok(Some(if can_hold { Category::Satisfiable } else { Category::Invalid }))
}

/// Draws up to `config.count` cases. Deterministic for a given seed, model
/// and solver.
pub fn generate_symbolic_tests(
    model: &PolicyModel,
    config: &GeneratorConfig,
    solver: &Solver,
    verifier: &VerifierConfig,
) -> Result<Generation, VetError> {
    let env = model.validate().map_err(crate::solver::SolverError::from)?;
    if model.variables.len() < 2 {
        return Err(VetError::TooFewVariables(model.variables.len()));
    }
    let constructors = |sort: &Sort| -> Vec<String> {
        match sort {
            Sort::Datatype(d) => env.datatype(d).map(<[String]>::to_vec).unwrap_or_default(),
            _ => Vec::new(),
        }
    };
    let second = Solver::new(solver.config().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Generation { cases: Vec::new(), dropped: 0, undecided: 0 };
    let mut blocks: Vec<Term> = Vec::new();
    let budget = config.count.saturating_mul(config.attempts_per_case.max(1));

    for _ in 0..budget {
        if out.cases.len() >= config.count {
            break;
        }
        let assignment = match solver.run(&Query::new(model, blocks.clone()))? {
            Verdict::Sat(a) => a,
            Verdict::Unsat(_) if blocks.is_empty() => return Err(VetError::ModelUnsat),
            // Every model has been seen; start over.
            Verdict::Unsat(_) => {
                blocks.clear();
                continue;
            }
            Verdict::Unknown(_) => {
                out.undecided += 1;
                blocks.clear();
                continue;
            }
        };
        if let Some(b) = blocking_clause(&assignment) {
            blocks.push(b);
        }

        let mut vars: Vec<&crate::policy::VariableSpec> = model
            .variables
            .iter()
            .filter(|v| !matches!(assignment.get(&v.name), Some(Value::Opaque(_)) | None))
            .collect();
        if vars.len() < 2 {
            continue;
        }
        vars.shuffle(&mut rng);
        let held = vars.pop().expect("at least two variables");
        let size = rng.gen_range(1..=vars.len().min(MAX_PREMISE_VARS));

        let mut conjuncts = Vec::new();
        for v in &vars[..size] {
            let mut value = assignment.get(&v.name).expect("bound").clone();
            if rng.gen_bool(MUTATION_RATE) {
                value = mutate(&value, &v.sort, &constructors(&v.sort), &mut rng);
            }
            conjuncts.extend(literal(&v.name, &value));
        }
        let held_value = assignment.get(&held.name).expect("bound");
        let Some(concl) = conclusion(&held.name, held_value, &constructors(&held.sort), &mut rng) else { continue };
        let premise = Term::and_all(conjuncts);

        let mut pair = ClaimPair::new(premise.clone(), concl.clone());
        pair.confidence = Some(Confidence::ONE);
        let finding = classify(&pair, model, solver, verifier, &[])?;
        if finding.category == Category::TooComplex {
            out.undecided += 1;
            continue;
        }
        if reverify(model, &premise, &concl, &second)? != Some(finding.category) {
            out.dropped += 1;
            continue;
        }
        out.cases.push(TestCase {
            id: Some(format!("gen-{}-{}", config.seed, out.cases.len() + 1)),
            kind: TestKind::Symbolic { premise: premise.to_string(), conclusion: concl.to_string() },
            expected: finding.category,
            provenance: Provenance::Generated,
        });
    }
    Ok(out)
}
