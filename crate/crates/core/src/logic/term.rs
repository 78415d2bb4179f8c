//! Sorted expression trees over the quantifier-free fragment.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::number::Decimal;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Bool,
    Int,
    Real,
    Datatype(String),
}

impl Sort {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Int => f.write_str("Int"),
            Sort::Real => f.write_str("Real"),
            Sort::Datatype(name) => f.write_str(name),
        }
    }
}

/// Binary arithmetic and comparison operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Gt,
    Lt,
    Le,
    Ge,
}

impl Op {
    pub const ALL: [Op; 9] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Eq, Op::Gt, Op::Lt, Op::Le, Op::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Eq => "=",
            Op::Gt => ">",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, Op::Add | Op::Sub | Op::Mul | Op::Div)
    }
}

/// A term of the fragment. Literals are non-negative; negation is written
/// `(- 0 e)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Constructor(String),
    Int(BigUint),
    Real(Decimal),
    Bool(bool),
    /// Two or more conjuncts.
    And(Vec<Term>),
    /// Two or more disjuncts.
    Or(Vec<Term>),
    Not(Box<Term>),
    Implies(Box<Term>, Box<Term>),
    Apply(Op, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn int(v: u64) -> Term {
        Term::Int(BigUint::from(v))
    }

    /// Parses a decimal literal such as `"0.75"`. Panics on malformed input;
    /// meant for fixtures and tests.
    pub fn real(text: &str) -> Term {
        Term::Real(text.parse().expect("decimal literal"))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Term) -> Term {
        Term::Not(Box::new(t))
    }

    pub fn implies(lhs: Term, rhs: Term) -> Term {
        Term::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn apply(op: Op, lhs: Term, rhs: Term) -> Term {
        Term::Apply(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eq(lhs: Term, rhs: Term) -> Term {
        Term::apply(Op::Eq, lhs, rhs)
    }

    /// Conjunction that collapses the degenerate arities: no conjuncts is
    /// `true`, one conjunct is itself.
    pub fn and_all(mut terms: Vec<Term>) -> Term {
        match terms.len() {
            0 => Term::Bool(true),
            1 => terms.pop().unwrap(),
            _ => Term::And(terms),
        }
    }

    pub fn or_all(mut terms: Vec<Term>) -> Term {
        match terms.len() {
            0 => Term::Bool(false),
            1 => terms.pop().unwrap(),
            _ => Term::Or(terms),
        }
    }

    /// Immediate subterms, in printing order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::And(ts) | Term::Or(ts) => ts.iter().collect(),
            Term::Not(t) => vec![t],
            Term::Implies(a, b) | Term::Apply(_, a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Names of the variables referenced by the term.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(name) => {
                out.insert(name.clone());
            }
            _ => self.children().into_iter().for_each(|c| c.collect_vars(out)),
        }
    }

    /// Renames variables through `f`; names it maps to `None` are kept.
    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> Term {
        match self {
            Term::Var(name) => Term::Var(f(name).unwrap_or_else(|| name.clone())),
            Term::And(ts) => Term::And(ts.iter().map(|t| t.rename_vars(f)).collect()),
            Term::Or(ts) => Term::Or(ts.iter().map(|t| t.rename_vars(f)).collect()),
            Term::Not(t) => Term::not(t.rename_vars(f)),
            Term::Implies(a, b) => Term::implies(a.rename_vars(f), b.rename_vars(f)),
            Term::Apply(op, a, b) => Term::apply(*op, a.rename_vars(f), b.rename_vars(f)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, head: &str, args: &[&Term]) -> fmt::Result {
            write!(f, "({head}")?;
            for a in args {
                write!(f, " {a}")?;
            }
            f.write_str(")")
        }
        match self {
            Term::Var(name) | Term::Constructor(name) => f.write_str(name),
            Term::Int(n) => write!(f, "{n}"),
            Term::Real(d) => write!(f, "{d}"),
            Term::Bool(b) => write!(f, "{b}"),
            Term::And(ts) => list(f, "and", &ts.iter().collect::<Vec<_>>()),
            Term::Or(ts) => list(f, "or", &ts.iter().collect::<Vec<_>>()),
            Term::Not(t) => list(f, "not", &[t]),
            Term::Implies(a, b) => list(f, "=>", &[a, b]),
            Term::Apply(op, a, b) => list(f, op.symbol(), &[a, b]),
        }
    }
}

/// An enumerated datatype.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DatatypeDecl {
    pub name: String,
    pub constructors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Declaration {
    Datatype(DatatypeDecl),
    Const { name: String, sort: Sort },
}

impl Declaration {
    pub fn name(&self) -> &str {
        match self {
            Declaration::Datatype(d) => &d.name,
            Declaration::Const { name, .. } => name,
        }
    }
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Declaration::Datatype(d) => {
                write!(f, "(declare-datatype {} (", d.name)?;
                for (i, c) in d.constructors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "({c})")?;
                }
                f.write_str("))")
            }
            Declaration::Const { name, sort } => write!(f, "(declare-const {name} {sort})"),
        }
    }
}

/// Words that may not be used as declared names.
pub const RESERVED: &[&str] = &[
    "and",
    "or",
    "not",
    "=>",
    "true",
    "false",
    "assert",
    "declare-const",
    "declare-datatype",
    "declare-datatypes",
    "declare-fun",
    "define-fun",
    "forall",
    "exists",
    "let",
    "ite",
    "Bool",
    "Int",
    "Real",
];

/// Simple symbols restricted to ASCII letters, digits and `_`, not starting
/// with a digit.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !RESERVED.contains(&name)
}
