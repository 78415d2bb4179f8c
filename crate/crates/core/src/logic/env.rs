//! Declaration environments and the sort checker.

use std::collections::BTreeMap;

use thiserror::Error;

use super::sexpr::SyntaxError;
use super::term::{is_identifier, DatatypeDecl, Declaration, Op, Sort, Term};

/// An ill-sorted subterm. `path` is the child-index path from the root
/// of the checked term.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort error in `{subterm}`: {message}")]
pub struct SortError {
    pub path: Vec<usize>,
    pub subterm: String,
    pub message: String,
    /// Byte offset in the source text, when the term came from the parser.
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeclarationError {
    #[error("`{0}` is declared more than once")]
    Duplicate(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("datatype `{0}` has no constructors")]
    EmptyDatatype(String),
    #[error("constructor `{constructor}` is repeated in datatype `{datatype}`")]
    DuplicateConstructor { datatype: String, constructor: String },
    #[error("sort `{0}` is not declared")]
    UnknownSort(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error("unknown symbol `{name}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownSymbol { name: String, suggestion: Option<String>, offset: Option<usize> },
    #[error(transparent)]
    Declaration(#[from] DeclarationError),
}

/// The names in scope for parsing and checking: datatypes with their
/// constructors, and sorted constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env {
    datatypes: BTreeMap<String, Vec<String>>,
    consts: BTreeMap<String, Sort>,
    constructors: BTreeMap<String, String>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_declarations<'a>(decls: impl IntoIterator<Item = &'a Declaration>) -> Result<Self, DeclarationError> {
        let mut env = Env::new();
        for d in decls {
            env.declare(d.clone())?;
        }
        Ok(env)
    }

    pub fn declare(&mut self, decl: Declaration) -> Result<(), DeclarationError> {
        match decl {
            Declaration::Datatype(dt) => self.declare_datatype(dt),
            Declaration::Const { name, sort } => self.declare_const(name, sort),
        }
    }

    fn is_taken(&self, name: &str) -> bool {
        self.datatypes.contains_key(name) || self.consts.contains_key(name) || self.constructors.contains_key(name)
    }

    pub fn declare_datatype(&mut self, dt: DatatypeDecl) -> Result<(), DeclarationError> {
        if !is_identifier(&dt.name) {
            return Err(DeclarationError::InvalidName(dt.name));
        }
        if self.is_taken(&dt.name) {
            return Err(DeclarationError::Duplicate(dt.name));
        }
        if dt.constructors.is_empty() {
            return Err(DeclarationError::EmptyDatatype(dt.name));
        }
        for (i, c) in dt.constructors.iter().enumerate() {
            if !is_identifier(c) {
                return Err(DeclarationError::InvalidName(c.clone()));
            }
            if dt.constructors[..i].contains(c) {
                return Err(DeclarationError::DuplicateConstructor {
                    datatype: dt.name.clone(),
                    constructor: c.clone(),
                });
            }
            if self.is_taken(c) || *c == dt.name {
                return Err(DeclarationError::Duplicate(c.clone()));
            }
        }
        for c in &dt.constructors {
            self.constructors.insert(c.clone(), dt.name.clone());
        }
        self.datatypes.insert(dt.name, dt.constructors);
        Ok(())
    }

    pub fn declare_const(&mut self, name: String, sort: Sort) -> Result<(), DeclarationError> {
        if !is_identifier(&name) {
            return Err(DeclarationError::InvalidName(name));
        }
        if self.is_taken(&name) {
            return Err(DeclarationError::Duplicate(name));
        }
        if let Sort::Datatype(dt) = &sort {
            if !self.datatypes.contains_key(dt) {
                return Err(DeclarationError::UnknownSort(dt.clone()));
            }
        }
        self.consts.insert(name, sort);
        Ok(())
    }

    pub fn const_sort(&self, name: &str) -> Option<&Sort> {
        self.consts.get(name)
    }

    pub fn constructor_datatype(&self, name: &str) -> Option<&str> {
        self.constructors.get(name).map(String::as_str)
    }

    pub fn datatype(&self, name: &str) -> Option<&[String]> {
        self.datatypes.get(name).map(Vec::as_slice)
    }

    pub fn has_datatype(&self, name: &str) -> bool {
        self.datatypes.contains_key(name)
    }

    pub fn consts(&self) -> impl Iterator<Item = (&str, &Sort)> {
        self.consts.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn datatypes(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.datatypes.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Resolves a sort name against declared datatypes.
    pub fn resolve_sort(&self, name: &str) -> Option<Sort> {
        match name {
            "Bool" => Some(Sort::Bool),
            "Int" => Some(Sort::Int),
            "Real" => Some(Sort::Real),
            dt if self.datatypes.contains_key(dt) => Some(Sort::Datatype(dt.to_string())),
            _ => None,
        }
    }

    /// Nearest declared constant or constructor name, for error messages.
    pub fn suggest(&self, name: &str) -> Option<String> {
        self.consts
            .keys()
            .chain(self.constructors.keys())
            .map(|cand| (strsim::levenshtein(name, cand), cand))
            .filter(|(d, cand)| *d <= 2.max(cand.len() / 3))
            .min()
            .map(|(_, c)| c.clone())
    }

    /// Computes the sort of a term, rejecting ill-sorted terms.
    pub fn sort_of(&self, term: &Term) -> Result<Sort, LogicError> {
        let mut path = Vec::new();
        self.check(term, &mut path)
    }

    /// Checks that a term is Bool-sorted.
    pub fn check_formula(&self, term: &Term) -> Result<(), LogicError> {
        match self.sort_of(term)? {
            Sort::Bool => Ok(()),
            other => Err(SortError {
                path: Vec::new(),
                subterm: term.to_string(),
                message: format!("expected a Bool formula, found sort {other}"),
                offset: None,
            }
            .into()),
        }
    }

    fn check(&self, term: &Term, path: &mut Vec<usize>) -> Result<Sort, LogicError> {
        let fail = |path: &[usize], sub: &Term, message: String| -> LogicError {
            SortError { path: path.to_vec(), subterm: sub.to_string(), message, offset: None }.into()
        };
        match term {
            Term::Var(name) => self.consts.get(name).cloned().ok_or_else(|| LogicError::UnknownSymbol {
                name: name.clone(),
                suggestion: self.suggest(name),
                offset: None,
            }),
            Term::Constructor(name) => {
                self.constructors.get(name).map(|dt| Sort::Datatype(dt.clone())).ok_or_else(|| {
                    LogicError::UnknownSymbol { name: name.clone(), suggestion: self.suggest(name), offset: None }
                })
            }
            Term::Int(_) => Ok(Sort::Int),
            Term::Real(_) => Ok(Sort::Real),
            Term::Bool(_) => Ok(Sort::Bool),
            Term::And(args) | Term::Or(args) => {
                if args.len() < 2 {
                    return Err(fail(path, term, "connective needs at least two arguments".into()));
                }
                for (i, a) in args.iter().enumerate() {
                    self.expect_bool(a, i, path, term)?;
                }
                Ok(Sort::Bool)
            }
            Term::Not(a) => {
                self.expect_bool(a, 0, path, term)?;
                Ok(Sort::Bool)
            }
            Term::Implies(a, b) => {
                self.expect_bool(a, 0, path, term)?;
                self.expect_bool(b, 1, path, term)?;
                Ok(Sort::Bool)
            }
            Term::Apply(op, a, b) => {
                path.push(0);
                let sa = self.check(a, path)?;
                path.pop();
                path.push(1);
                let sb = self.check(b, path)?;
                path.pop();
                let numeric = |s: &Sort, i: usize, sub: &Term| -> Result<(), LogicError> {
                    if s.is_numeric() {
                        Ok(())
                    } else {
                        let mut p = path.clone();
                        p.push(i);
                        Err(fail(&p, sub, format!("`{}` expects a numeric argument, found sort {s}", op.symbol())))
                    }
                };
                match op {
                    Op::Add | Op::Sub | Op::Mul | Op::Div => {
                        numeric(&sa, 0, a)?;
                        numeric(&sb, 1, b)?;
                        if sa == Sort::Int && sb == Sort::Int && *op != Op::Div {
                            Ok(Sort::Int)
                        } else {
                            Ok(Sort::Real)
                        }
                    }
                    Op::Gt | Op::Lt | Op::Le | Op::Ge => {
                        numeric(&sa, 0, a)?;
                        numeric(&sb, 1, b)?;
                        Ok(Sort::Bool)
                    }
                    Op::Eq => {
                        if (sa.is_numeric() && sb.is_numeric()) || sa == sb {
                            Ok(Sort::Bool)
                        } else {
                            let mut p = path.clone();
                            p.push(1);
                            Err(fail(&p, b, format!("`=` compares sort {sa} with sort {sb}")))
                        }
                    }
                }
            }
        }
    }

    fn expect_bool(&self, arg: &Term, index: usize, path: &mut Vec<usize>, parent: &Term) -> Result<(), LogicError> {
        path.push(index);
        let sort = self.check(arg, path)?;
        let result = if sort == Sort::Bool {
            Ok(())
        } else {
            let head = match parent {
                Term::And(_) => "and",
                Term::Or(_) => "or",
                Term::Not(_) => "not",
                _ => "=>",
            };
            Err(SortError {
                path: path.clone(),
                subterm: arg.to_string(),
                message: format!("argument {} of `{head}` must be Bool, found sort {sort}", index + 1),
                offset: None,
            }
            .into())
        };
        path.pop();
        result
    }
}
