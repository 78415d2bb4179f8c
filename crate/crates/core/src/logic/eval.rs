//! Exact evaluation of terms under variable assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::number::{format_rational, Decimal};
use super::term::{Op, Sort, Term};

/// A concrete value for a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    Constructor(String),
    /// A solver value outside the exact rationals (e.g. an algebraic
    /// `root-obj`), kept verbatim.
    Opaque(String),
}

impl Value {
    pub fn default_for(sort: &Sort, first_constructor: Option<&str>) -> Value {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
            Sort::Datatype(_) => Value::Constructor(first_constructor.unwrap_or_default().to_string()),
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(i) => Some(BigRational::from_integer(i.clone())),
            Value::Real(r) => Some(r.clone()),
            _ => None,
        }
    }

    /// A literal term denoting this value. Negative numbers become
    /// `(- 0 n)`, non-terminating reals `(/ n d)`.
    pub fn to_term(&self) -> Option<Term> {
        Some(match self {
            Value::Bool(b) => Term::Bool(*b),
            Value::Constructor(c) => Term::Constructor(c.clone()),
            Value::Int(i) => {
                let lit = Term::Int(i.abs().to_biguint()?);
                if i.is_negative() {
                    Term::apply(Op::Sub, Term::int(0), lit)
                } else {
                    lit
                }
            }
            Value::Real(r) => {
                let abs = r.abs();
                let lit = match Decimal::from_rational(&abs) {
                    Some(d) => Term::Real(d),
                    None => Term::apply(
                        Op::Div,
                        Term::Real(Decimal::from_integer(abs.numer().to_biguint()?)),
                        Term::Real(Decimal::from_integer(abs.denom().to_biguint()?)),
                    ),
                };
                if r.is_negative() {
                    Term::apply(Op::Sub, Term::real("0.0"), lit)
                } else {
                    lit
                }
            }
            Value::Opaque(_) => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&format_rational(r)),
            Value::Constructor(c) => f.write_str(c),
            Value::Opaque(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not assigned")]
    Unbound(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("value `{0}` cannot be evaluated exactly")]
    Opaque(String),
    #[error("ill-sorted operands in `{0}`")]
    IllSorted(String),
}

/// Variable bindings, optionally marking which bindings the solver left
/// unconstrained and were filled with sort defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub bindings: BTreeMap<String, Value>,
    pub arbitrary: BTreeSet<String>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.bindings.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn eval(&self, term: &Term) -> Result<Value, EvalError> {
        let bool_of = |t: &Term| -> Result<bool, EvalError> {
            match self.eval(t)? {
                Value::Bool(b) => Ok(b),
                _ => Err(EvalError::IllSorted(t.to_string())),
            }
        };
        Ok(match term {
            Term::Var(name) => match self.bindings.get(name) {
                Some(Value::Opaque(s)) => return Err(EvalError::Opaque(s.clone())),
                Some(v) => v.clone(),
                None => return Err(EvalError::Unbound(name.clone())),
            },
            Term::Constructor(c) => Value::Constructor(c.clone()),
            Term::Int(n) => Value::Int(BigInt::from(n.clone())),
            Term::Real(d) => Value::Real(d.to_rational()),
            Term::Bool(b) => Value::Bool(*b),
            Term::And(ts) => {
                let mut all = true;
                for t in ts {
                    all &= bool_of(t)?;
                }
                Value::Bool(all)
            }
            Term::Or(ts) => {
                let mut any = false;
                for t in ts {
                    any |= bool_of(t)?;
                }
                Value::Bool(any)
            }
            Term::Not(t) => Value::Bool(!bool_of(t)?),
            Term::Implies(a, b) => {
                let a = bool_of(a)?;
                let b = bool_of(b)?;
                Value::Bool(!a || b)
            }
            Term::Apply(op, a, b) => {
                let va = self.eval(a)?;
                let vb = self.eval(b)?;
                if *op == Op::Eq {
                    return Ok(Value::Bool(match (va.as_rational(), vb.as_rational()) {
                        (Some(x), Some(y)) => x == y,
                        _ => va == vb,
                    }));
                }
                let (Some(x), Some(y)) = (va.as_rational(), vb.as_rational()) else {
                    return Err(EvalError::IllSorted(term.to_string()));
                };
                let both_int = matches!((&va, &vb), (Value::Int(_), Value::Int(_)));
                let arith = |r: BigRational| {
                    if both_int && r.is_integer() && *op != Op::Div {
                        Value::Int(r.to_integer())
                    } else {
                        Value::Real(r)
                    }
                };
                match op {
                    Op::Add => arith(x + y),
                    Op::Sub => arith(x - y),
                    Op::Mul => arith(x * y),
                    Op::Div => {
                        if y.is_zero() {
                            return Err(EvalError::DivisionByZero(term.to_string()));
                        }
                        Value::Real(x / y)
                    }
                    Op::Gt => Value::Bool(x > y),
                    Op::Lt => Value::Bool(x < y),
                    Op::Le => Value::Bool(x <= y),
                    Op::Ge => Value::Bool(x >= y),
                    Op::Eq => unreachable!(),
                }
            }
        })
    }

    /// Evaluates a formula to a truth value.
    pub fn holds(&self, term: &Term) -> Result<bool, EvalError> {
        match self.eval(term)? {
            Value::Bool(b) => Ok(b),
            _ => Err(EvalError::IllSorted(term.to_string())),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
