//! Formal policy models: datatypes, described variables and rules.

mod compose;
mod embed;
mod file;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{DatatypeDecl, Declaration, DeclarationError, Env, LogicError, Sort, Term};

pub use compose::{compose, compose_detailed, ComposeError, Composition, DEFAULT_CLUSTER_THRESHOLD};
pub use embed::{EmbeddingProvider, LexicalEmbedder};
pub use file::{load, load_str, save, to_json_string, FormatError, PolicyIoError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub sort: Sort,
    pub description: String,
    /// Other descriptions this variable absorbed during composition.
    pub provenance: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, sort: Sort, description: impl Into<String>) -> Self {
        Self { name: name.into(), sort, description: description.into(), provenance: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub term: Term,
    /// Reference to the source text span, if known.
    pub provenance: Option<String>,
}

impl Rule {
    pub fn new(id: impl Into<String>, term: Term) -> Self {
        Self { id: id.into(), term, provenance: None }
    }
}

/// Who vetted a model and against which suite. All fields optional.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VettedStamp {
    pub by: Option<String>,
    pub at: Option<String>,
    pub suite: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Declaration(#[from] DeclarationError),
    #[error("variable `{0}` has an empty description")]
    EmptyDescription(String),
    #[error("rule id `{0}` is used more than once")]
    DuplicateRuleId(String),
    #[error("rules `{first}` and `{second}` are identical")]
    DuplicateRule { first: String, second: String },
    #[error("rule `{id}`: {source}")]
    Rule { id: String, source: LogicError },
}

/// The formal policy model `M`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyModel {
    pub datatypes: Vec<DatatypeDecl>,
    pub variables: Vec<VariableSpec>,
    pub rules: Vec<Rule>,
    pub vetted: Option<VettedStamp>,
}

/// The formalization of one text span, before composition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyUnit {
    pub datatypes: Vec<DatatypeDecl>,
    pub variables: Vec<VariableSpec>,
    pub rules: Vec<Rule>,
}

impl PolicyUnit {
    pub fn is_empty(&self) -> bool {
        self.datatypes.is_empty() && self.variables.is_empty() && self.rules.is_empty()
    }

    pub fn into_model(self) -> PolicyModel {
        PolicyModel { datatypes: self.datatypes, variables: self.variables, rules: self.rules, vetted: None }
    }

    pub fn validate(&self) -> Result<Env, ModelError> {
        self.clone().into_model().validate()
    }
}

impl From<PolicyModel> for PolicyUnit {
    fn from(m: PolicyModel) -> Self {
        PolicyUnit { datatypes: m.datatypes, variables: m.variables, rules: m.rules }
    }
}

impl PolicyModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declarations(&self) -> Vec<Declaration> {
        self.datatypes
            .iter()
            .cloned()
            .map(Declaration::Datatype)
            .chain(self.variables.iter().map(|v| Declaration::Const { name: v.name.clone(), sort: v.sort.clone() }))
            .collect()
    }

    /// The declaration environment, without checking rules.
    pub fn env(&self) -> Result<Env, ModelError> {
        Ok(Env::from_declarations(&self.declarations())?)
    }

    /// Checks every model invariant and returns the environment.
    pub fn validate(&self) -> Result<Env, ModelError> {
        let env = self.env()?;
        if let Some(v) = self.variables.iter().find(|v| v.description.trim().is_empty()) {
            return Err(ModelError::EmptyDescription(v.name.clone()));
        }
        let mut ids = BTreeSet::new();
        let mut printed: BTreeMap<String, &str> = BTreeMap::new();
        for r in &self.rules {
            if !ids.insert(r.id.as_str()) {
                return Err(ModelError::DuplicateRuleId(r.id.clone()));
            }
            env.check_formula(&r.term).map_err(|source| ModelError::Rule { id: r.id.clone(), source })?;
            if let Some(first) = printed.insert(r.term.to_string(), &r.id) {
                return Err(ModelError::DuplicateRule { first: first.to_string(), second: r.id.clone() });
            }
        }
        Ok(env)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Variables that occur in no rule.
    pub fn unused_variables(&self) -> Vec<&str> {
        let used: BTreeSet<String> = self.rules.iter().flat_map(|r| r.term.free_vars()).collect();
        self.variables.iter().map(|v| v.name.as_str()).filter(|n| !used.contains(*n)).collect()
    }

    /// The model as an SMT-LIB script, descriptions as trailing comments.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::new();
        for d in &self.datatypes {
            out.push_str(&Declaration::Datatype(d.clone()).to_string());
            out.push('\n');
        }
        for v in &self.variables {
            let decl = Declaration::Const { name: v.name.clone(), sort: v.sort.clone() };
            out.push_str(&format!("{decl} ; {}\n", v.description.replace('\n', " ")));
        }
        for r in &self.rules {
            out.push_str(&format!("(assert {})\n", r.term));
        }
        out
    }
}

impl fmt::Display for PolicyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_smtlib())
    }
}
