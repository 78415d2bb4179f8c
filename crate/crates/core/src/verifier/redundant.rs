//! Redundant translation and support counting.
//!
//! A translation `T'` supports a pair `(P, C)` when `T' ⊨ P ⇒ C` and
//! `T' ∧ P` is consistent, both judged under the model's declarations
//! only. `T'` stands for the conjunction of its pairs' implications.

use super::{conjunction, VerifierConfig, VerifyError};
use crate::logic::Term;
use crate::policy::PolicyModel;
use crate::solver::{Query, Rules, Solver, Verdict};
use crate::translator::{ClaimPair, Confidence, Translation, TranslatorPool};

/// A distinct pair with its confidence set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub pair: ClaimPair,
    /// Translations that produced this pair (up to equivalence).
    pub origins: Vec<usize>,
    pub supporters: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Redundant {
    pub translations: Vec<Translation>,
    pub scored: Vec<Scored>,
    /// Pairs whose support could not be decided, with the solver's reason.
    pub undetermined: Vec<(ClaimPair, String)>,
    pub untranslatable: Vec<String>,
}

impl Redundant {
    /// Alternatives a disagreeing translation offers against `sc`: its own
    /// pairs, then the translation as a whole.
    pub(crate) fn non_supporting(&self, sc: &Scored) -> Vec<ClaimPair> {
        let mut out = Vec::new();
        for (i, t) in self.translations.iter().enumerate() {
            if sc.supporters.contains(&i) {
                continue;
            }
            out.extend(t.pairs.iter().cloned());
            if t.pairs.len() != 1 {
                out.push(ClaimPair::new(Term::Bool(true), conjunction(&t.pairs)));
            }
        }
        out
    }
}

enum Decided {
    Yes,
    No,
    Unknown(String),
}

fn unsat(
    solver: &Solver,
    model: &PolicyModel,
    extra: Vec<Term>,
    config: &VerifierConfig,
) -> Result<Decided, VerifyError> {
    let mut q = Query::new(model, extra).rules(Rules::None);
    q.timeout = config.timeout;
    Ok(match solver.run(&q)? {
        Verdict::Unsat(_) => Decided::Yes,
        Verdict::Sat(_) => Decided::No,
        Verdict::Unknown(r) => Decided::Unknown(r),
    })
}

fn iff(a: &Term, b: &Term) -> Term {
    Term::eq(a.clone(), b.clone())
}

/// Same pair up to equivalence of premise and of conclusion.
fn same_pair(
    a: &ClaimPair,
    b: &ClaimPair,
    model: &PolicyModel,
    solver: &Solver,
    config: &VerifierConfig,
) -> Result<bool, VerifyError> {
    if a.premise == b.premise && a.conclusion == b.conclusion {
        return Ok(true);
    }
    for (x, y) in [(&a.premise, &b.premise), (&a.conclusion, &b.conclusion)] {
        if x == y {
            continue;
        }
        if !matches!(unsat(solver, model, vec![Term::not(iff(x, y))], config)?, Decided::Yes) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs every backend on `text` and scores the distinct pairs.
pub fn redundant_translate(
    text: &str,
    model: &PolicyModel,
    pool: &TranslatorPool,
    solver: &Solver,
    config: &VerifierConfig,
) -> Result<Redundant, VerifyError> {
    let mut translations = Vec::new();
    for t in pool.translate_all(text, model, config.repair_budget) {
        translations.push(t?);
    }
    let k = translations.len() as u32;

    let mut untranslatable: Vec<String> = Vec::new();
    for t in &translations {
        for s in &t.untranslatable {
            if !untranslatable.contains(s) {
                untranslatable.push(s.clone());
            }
        }
    }

    let mut distinct: Vec<(ClaimPair, Vec<usize>)> = Vec::new();
    for (i, t) in translations.iter().enumerate() {
        for pair in &t.pairs {
            let mut found = None;
            for (j, (seen, _)) in distinct.iter().enumerate() {
                if same_pair(seen, pair, model, solver, config)? {
                    found = Some(j);
                    break;
                }
            }
            match found {
                Some(j) if !distinct[j].1.contains(&i) => distinct[j].1.push(i),
                Some(_) => {}
                None => distinct.push((pair.clone(), vec![i])),
            }
        }
    }

    let theories: Vec<Term> = translations.iter().map(|t| conjunction(&t.pairs)).collect();
    let mut scored = Vec::new();
    let mut undetermined = Vec::new();
    'pairs: for (mut pair, origins) in distinct {
        let mut supporters = Vec::new();
        for (i, theory) in theories.iter().enumerate() {
            let entails = unsat(solver, model, vec![theory.clone(), Term::not(pair.implication())], config)?;
            let inconsistent = match entails {
                Decided::Yes => unsat(solver, model, vec![theory.clone(), pair.premise.clone()], config)?,
                Decided::No => continue,
                Decided::Unknown(r) => {
                    undetermined.push((pair, format!("support check undecided: {r}")));
                    continue 'pairs;
                }
            };
            match inconsistent {
                Decided::No => supporters.push(i),
                Decided::Yes => {}
                Decided::Unknown(r) => {
                    undetermined.push((pair, format!("support check undecided: {r}")));
                    continue 'pairs;
                }
            }
        }
        pair.confidence = Some(Confidence::new(supporters.len() as u32, k));
        scored.push(Scored { pair, origins, supporters });
    }
    Ok(Redundant { translations, scored, undetermined, untranslatable })
}
