//! The quantifier-free SMT-LIB fragment: terms over Bool, Int, Real and
//! enumerated datatypes, with a parser, canonical printer, sort checker and
//! exact evaluator.

mod env;
mod eval;
mod number;
mod parse;
pub mod sexpr;
mod term;

pub use env::{DeclarationError, Env, LogicError, SortError};
pub use eval::{Assignment, EvalError, Value};
pub use number::{format_rational, Decimal};
pub use parse::{parse_formula, parse_script, parse_script_in, parse_term, Script};
pub use sexpr::SyntaxError;
pub use term::{is_identifier, DatatypeDecl, Declaration, Op, Sort, Term};

/// Canonical single-space prefix rendering of a term.
pub fn print_term(term: &Term) -> String {
    term.to_string()
}
