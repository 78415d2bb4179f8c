//! Random term generators over a fixed vocabulary.

use num_bigint::BigUint;
use policyguard::logic::{DatatypeDecl, Decimal, Env, Op, Sort, Term};
use rand::seq::SliceRandom;
use rand::Rng;

pub const BOOLS: &[&str] = &["b0", "b1", "b2"];
pub const INTS: &[&str] = &["i0", "i1"];
pub const REALS: &[&str] = &["r0", "r1"];
pub const COLORS: &[&str] = &["c0", "c1"];
pub const CONSTRUCTORS: &[&str] = &["RED", "GREEN", "BLUE"];

pub fn vocabulary() -> Env {
    let mut env = Env::new();
    env.declare_datatype(DatatypeDecl {
        name: "Color".into(),
        constructors: CONSTRUCTORS.iter().map(|s| s.to_string()).collect(),
    })
    .unwrap();
    for (names, sort) in
        [(BOOLS, Sort::Bool), (INTS, Sort::Int), (REALS, Sort::Real), (COLORS, Sort::Datatype("Color".into()))]
    {
        for n in names {
            env.declare_const(n.to_string(), sort.clone()).unwrap();
        }
    }
    env
}

fn pick(rng: &mut impl Rng, names: &[&str]) -> String {
    names.choose(rng).unwrap().to_string()
}

fn int_lit(rng: &mut impl Rng) -> Term {
    Term::Int(BigUint::from(rng.gen_range(0u64..1000)))
}

fn real_lit(rng: &mut impl Rng) -> Term {
    let scale = rng.gen_range(1..4);
    Term::Real(Decimal::new(BigUint::from(rng.gen_range(0u64..100_000)), scale))
}

fn numeric(rng: &mut impl Rng, depth: usize) -> Term {
    if rng.gen_bool(0.5) {
        well_sorted(rng, &Sort::Int, depth)
    } else {
        well_sorted(rng, &Sort::Real, depth)
    }
}

/// A random well-sorted term of the given sort, at most `depth` deep.
pub fn well_sorted(rng: &mut impl Rng, sort: &Sort, depth: usize) -> Term {
    let leaf = depth <= 1 || rng.gen_bool(0.3);
    match sort {
        Sort::Bool if leaf => {
            if rng.gen_bool(0.8) {
                Term::Var(pick(rng, BOOLS))
            } else {
                Term::Bool(rng.gen())
            }
        }
        Sort::Bool => match rng.gen_range(0..7) {
            0 | 1 => {
                let n = rng.gen_range(2..=4);
                let args = (0..n).map(|_| well_sorted(rng, &Sort::Bool, depth - 1)).collect();
                if rng.gen() {
                    Term::And(args)
                } else {
                    Term::Or(args)
                }
            }
            2 => Term::not(well_sorted(rng, &Sort::Bool, depth - 1)),
            3 => Term::implies(well_sorted(rng, &Sort::Bool, depth - 1), well_sorted(rng, &Sort::Bool, depth - 1)),
            4 => {
                let op = *[Op::Gt, Op::Lt, Op::Le, Op::Ge, Op::Eq].choose(rng).unwrap();
                Term::apply(op, numeric(rng, depth - 1), numeric(rng, depth - 1))
            }
            5 => Term::eq(
                well_sorted(rng, &Sort::Datatype("Color".into()), depth - 1),
                well_sorted(rng, &Sort::Datatype("Color".into()), depth - 1),
            ),
            _ => Term::eq(well_sorted(rng, &Sort::Bool, depth - 1), well_sorted(rng, &Sort::Bool, depth - 1)),
        },
        Sort::Int if leaf => {
            if rng.gen_bool(0.6) {
                Term::Var(pick(rng, INTS))
            } else {
                int_lit(rng)
            }
        }
        Sort::Int => {
            let op = *[Op::Add, Op::Sub, Op::Mul].choose(rng).unwrap();
            Term::apply(op, well_sorted(rng, &Sort::Int, depth - 1), well_sorted(rng, &Sort::Int, depth - 1))
        }
        Sort::Real if leaf => {
            if rng.gen_bool(0.6) {
                Term::Var(pick(rng, REALS))
            } else {
                real_lit(rng)
            }
        }
        Sort::Real => {
            let op = *[Op::Add, Op::Sub, Op::Mul, Op::Div].choose(rng).unwrap();
            if op == Op::Div {
                Term::apply(op, numeric(rng, depth - 1), numeric(rng, depth - 1))
            } else {
                Term::apply(op, well_sorted(rng, &Sort::Real, depth - 1), numeric(rng, depth - 1))
            }
        }
        Sort::Datatype(_) => {
            if rng.gen() {
                Term::Var(pick(rng, COLORS))
            } else {
                Term::Constructor(pick(rng, CONSTRUCTORS))
            }
        }
    }
}

/// A random term built from grammar productions without regard to sorts.
pub fn unsorted(rng: &mut impl Rng, depth: usize) -> Term {
    if depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..8) {
            0 => Term::Var(pick(rng, BOOLS)),
            1 => Term::Var(pick(rng, INTS)),
            2 => Term::Var(pick(rng, REALS)),
            3 => Term::Var(pick(rng, COLORS)),
            4 => Term::Constructor(pick(rng, CONSTRUCTORS)),
            5 => int_lit(rng),
            6 => real_lit(rng),
            _ => Term::Bool(rng.gen()),
        };
    }
    match rng.gen_range(0..5) {
        0 => {
            let args = (0..rng.gen_range(2..=3)).map(|_| unsorted(rng, depth - 1)).collect();
            Term::And(args)
        }
        1 => {
            let args = (0..rng.gen_range(2..=3)).map(|_| unsorted(rng, depth - 1)).collect();
            Term::Or(args)
        }
        2 => Term::not(unsorted(rng, depth - 1)),
        3 => Term::implies(unsorted(rng, depth - 1), unsorted(rng, depth - 1)),
        _ => Term::apply(*Op::ALL.choose(rng).unwrap(), unsorted(rng, depth - 1), unsorted(rng, depth - 1)),
    }
}

/// A random formula over the given Boolean variables.
pub fn boolean(rng: &mut impl Rng, vars: &[&str], depth: usize) -> Term {
    if depth <= 1 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.9) { Term::Var(pick(rng, vars)) } else { Term::Bool(rng.gen()) };
    }
    match rng.gen_range(0..5) {
        0 => Term::And((0..rng.gen_range(2..=3)).map(|_| boolean(rng, vars, depth - 1)).collect()),
        1 => Term::Or((0..rng.gen_range(2..=3)).map(|_| boolean(rng, vars, depth - 1)).collect()),
        2 => Term::not(boolean(rng, vars, depth - 1)),
        3 => Term::implies(boolean(rng, vars, depth - 1), boolean(rng, vars, depth - 1)),
        _ => Term::eq(boolean(rng, vars, depth - 1), boolean(rng, vars, depth - 1)),
    }
}

/// Every assignment of the variables, as an evaluation environment.
pub fn all_assignments(vars: &[&str]) -> Vec<policyguard::logic::Assignment> {
    use policyguard::logic::{Assignment, Value};
    (0..1u32 << vars.len())
        .map(|bits| {
            vars.iter().enumerate().fold(Assignment::new(), |a, (i, v)| a.with(v, Value::Bool(bits >> i & 1 == 1)))
        })
        .collect()
}
