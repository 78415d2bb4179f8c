//! Independent oracles for the acceptance target.
//!
//! Nothing here calls the solver or the engine's evaluator, so agreement
//! between these functions and the engine is evidence rather than an echo.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use policyguard::logic::{Op, Term};

/// Published comparison rows: name, printed S, FPR, Pr, Re, F1, Ac, then
/// TP, FP, TN, FN.
pub const PUBLISHED_ROWS: [(&str, [f64; 6], [u64; 4]); 14] = [
    ("ensemble 3/3", [99.2, 2.5, 92.6, 15.6, 26.7, 42.7], [163, 13, 506, 884]),
    ("ensemble 2/3", [98.7, 4.0, 91.0, 20.3, 33.3, 45.4], [213, 21, 498, 834]),
    ("single translation", [98.6, 4.2, 93.8, 31.7, 47.4, 52.9], [332, 22, 497, 715]),
    ("judge ensemble 3/3", [98.3, 5.0, 92.1, 29.0, 44.2, 50.9], [304, 26, 493, 743]),
    ("judge ensemble 2/3", [96.3, 11.2, 90.1, 50.1, 64.4, 63.0], [525, 58, 461, 522]),
    ("judge single", [94.8, 15.6, 87.4, 53.5, 66.4, 63.7], [560, 81, 438, 487]),
    ("judge single, thinking", [94.9, 15.4, 88.2, 57.1, 69.3, 66.2], [598, 80, 439, 449]),
    ("FG implicit span-level", [96.4, 11.0, 90.5, 52.0, 66.0, 64.2], [544, 57, 462, 503]),
    ("FG JSON", [92.5, 22.7, 86.3, 71.2, 78.0, 73.2], [745, 118, 401, 302]),
    ("FG response-level", [94.4, 17.0, 85.7, 50.5, 63.6, 61.3], [529, 88, 431, 518]),
    ("MiniCheck", [90.4, 28.9, 82.9, 69.3, 75.5, 69.9], [726, 150, 369, 321]),
    ("RefChecker", [84.4, 47.2, 78.9, 87.6, 83.0, 76.1], [917, 245, 274, 130]),
    ("SelfCheckGPT", [95.0, 15.0, 90.5, 71.3, 79.7, 75.8], [746, 78, 441, 301]),
    ("Logic-LM", [97.4, 7.7, 84.0, 20.2, 32.6, 44.1], [212, 40, 479, 835]),
];

/// The published tolerance: values are printed to one decimal.
pub const METRIC_TOLERANCE: f64 = 0.05;

/// S, FPR, Pr, Re, F1, Ac in plain floating point.
pub fn float_metrics([tp, fp, tn, fn_]: [u64; 4]) -> [f64; 6] {
    let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    let total = tp + fp + tn + fn_;
    [
        pct(total - fp, total),
        pct(fp, fp + tn),
        pct(tp, tp + fp),
        pct(tp, tp + fn_),
        pct(2 * tp, 2 * tp + fp + fn_),
        pct(tp + tn, total),
    ]
}

/// The four definitive outcomes, judged by enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Truth {
    Impossible,
    Invalid,
    Satisfiable,
    Valid,
}

/// Evaluates a Boolean connective term; `None` on anything else.
pub fn eval_bool(t: &Term, world: &BTreeMap<String, bool>) -> Option<bool> {
    Some(match t {
        Term::Var(v) => *world.get(v)?,
        Term::Bool(b) => *b,
        Term::And(xs) => {
            let mut all = true;
            for x in xs {
                all &= eval_bool(x, world)?;
            }
            all
        }
        Term::Or(xs) => {
            let mut any = false;
            for x in xs {
                any |= eval_bool(x, world)?;
            }
            any
        }
        Term::Not(x) => !eval_bool(x, world)?,
        Term::Implies(a, b) => !eval_bool(a, world)? || eval_bool(b, world)?,
        Term::Apply(Op::Eq, a, b) => eval_bool(a, world)? == eval_bool(b, world)?,
        _ => return None,
    })
}

/// Every assignment of `vars`.
pub fn worlds(vars: &[&str]) -> Vec<BTreeMap<String, bool>> {
    (0..1u32 << vars.len())
        .map(|bits| vars.iter().enumerate().map(|(i, v)| (v.to_string(), bits >> i & 1 == 1)).collect())
        .collect()
}

/// Classifies `premise ⇒ conclusion` against `rules` by looking at every
/// world that satisfies the rules and the premise.
pub fn truth_table(rules: &[Term], premise: &Term, conclusion: &Term, vars: &[&str]) -> Truth {
    let mut with_c = false;
    let mut without_c = false;
    for w in worlds(vars) {
        let admitted = rules.iter().all(|r| eval_bool(r, &w) == Some(true)) && eval_bool(premise, &w) == Some(true);
        if admitted {
            match eval_bool(conclusion, &w).expect("boolean conclusion") {
                true => with_c = true,
                false => without_c = true,
            }
        }
    }
    match (with_c, without_c) {
        (false, false) => Truth::Impossible,
        (true, false) => Truth::Valid,
        (false, true) => Truth::Invalid,
        (true, true) => Truth::Satisfiable,
    }
}

/// Whether some world satisfies every term.
pub fn consistent(terms: &[Term], vars: &[&str]) -> bool {
    worlds(vars).iter().any(|w| terms.iter().all(|t| eval_bool(t, w) == Some(true)))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// The park admission walk-through for a low-season senior buying three
/// credit bundles: fee, fee after discount and processing, expense before
/// tax, final expense.
pub fn park_credit_chain() -> [BigRational; 4] {
    let base = q(50, 1);
    let low_season = &base * q(3, 4);
    let after_discount = &low_season * (q(1, 1) - q(1, 4)) + q(10, 1);
    let bundles = q(3, 1);
    let credits = &bundles * q(5, 1);
    let credit_cost = &bundles * q(3, 1);
    let cash = &after_discount - credits;
    let before_tax = cash + credit_cost;
    let final_expense = &before_tax * q(11, 10);
    [low_season, after_discount, before_tax, final_expense]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_matches_hand_arithmetic() {
        assert_eq!(park_credit_chain(), [q(75, 2), q(305, 8), q(257, 8), q(2827, 80)]);
    }

    #[test]
    fn first_row_in_floats() {
        let m = float_metrics([163, 13, 506, 884]);
        for (got, want) in m.iter().zip([99.2, 2.5, 92.6, 15.6, 26.7, 42.7]) {
            assert!((got - want).abs() <= METRIC_TOLERANCE, "{got} vs {want}");
        }
    }

    #[test]
    fn truth_table_basics() {
        let (p, q) = (Term::var("p"), Term::var("q"));
        let rules = [Term::implies(p.clone(), q.clone())];
        assert_eq!(truth_table(&rules, &p, &q, &["p", "q"]), Truth::Valid);
        assert_eq!(truth_table(&rules, &p, &Term::not(q.clone()), &["p", "q"]), Truth::Invalid);
        assert_eq!(truth_table(&rules, &q, &p, &["p", "q"]), Truth::Satisfiable);
        assert_eq!(truth_table(&rules, &Term::And(vec![p.clone(), Term::not(q)]), &p, &["p", "q"]), Truth::Impossible);
    }
}
