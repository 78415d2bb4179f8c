//! JSON persistence for policy models.
//!
//! ```json
//! {"datatypes": [{"name": "AgeClass", "constructors": ["SENIOR", "ADULT"]}],
//!  "variables": [{"name": "ageClass", "sort": {"datatype": "AgeClass"}, "description": "..."}],
//!  "rules": [{"id": "1", "smtlib": "(= ageClass SENIOR)"}]}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::{ModelError, PolicyModel, Rule, VariableSpec, VettedStamp};
use crate::logic::{parse_formula, DatatypeDecl, LogicError, Sort};

/// A malformed policy file. `pointer` is a JSON pointer into the document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pointer}: {message}")]
pub struct FormatError {
    pub pointer: String,
    pub message: String,
}

impl FormatError {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self { pointer: pointer.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum PolicyIoError {
    #[error("cannot access {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Format(#[from] FormatError),
}

fn sort_json(sort: &Sort) -> Value {
    match sort {
        Sort::Datatype(name) => json!({ "datatype": name }),
        other => json!(other.to_string()),
    }
}

fn stamp_json(s: &VettedStamp) -> Value {
    let mut m = Map::new();
    for (k, v) in [("by", &s.by), ("at", &s.at), ("suite", &s.suite)] {
        if let Some(v) = v {
            m.insert(k.into(), json!(v));
        }
    }
    Value::Object(m)
}

pub fn to_json(model: &PolicyModel) -> Value {
    let mut root = Map::new();
    root.insert(
        "datatypes".into(),
        model.datatypes.iter().map(|d| json!({"name": d.name, "constructors": d.constructors})).collect(),
    );
    root.insert(
        "variables".into(),
        model
            .variables
            .iter()
            .map(|v| {
                let mut o = json!({"name": v.name, "sort": sort_json(&v.sort), "description": v.description});
                if !v.provenance.is_empty() {
                    o["provenance"] = json!(v.provenance);
                }
                o
            })
            .collect(),
    );
    root.insert(
        "rules".into(),
        model
            .rules
            .iter()
            .map(|r| {
                let mut o = json!({"id": r.id, "smtlib": r.term.to_string()});
                if let Some(p) = &r.provenance {
                    o["provenance"] = json!(p);
                }
                o
            })
            .collect(),
    );
    if let Some(stamp) = &model.vetted {
        root.insert("metadata".into(), json!({ "vetted": stamp_json(stamp) }));
    }
    Value::Object(root)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(model: &PolicyModel) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(model)).expect("json values always serialize");
    s.push('\n');
    s
}

pub fn save(model: &PolicyModel, path: &Path) -> Result<(), PolicyIoError> {
    fs::write(path, to_json_string(model)).map_err(|source| PolicyIoError::Io { path: path.into(), source })
}

pub fn load(path: &Path) -> Result<PolicyModel, PolicyIoError> {
    let text = fs::read_to_string(path).map_err(|source| PolicyIoError::Io { path: path.into(), source })?;
    Ok(load_str(&text)?)
}

fn field<'a>(obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Result<&'a Value, FormatError> {
    obj.get(key).ok_or_else(|| FormatError::new(ptr, format!("missing field `{key}`")))
}

fn object<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>, FormatError> {
    v.as_object().ok_or_else(|| FormatError::new(ptr, "expected an object"))
}

fn array<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>, FormatError> {
    v.as_array().ok_or_else(|| FormatError::new(ptr, "expected an array"))
}

fn string(v: &Value, ptr: &str) -> Result<String, FormatError> {
    v.as_str().map(str::to_string).ok_or_else(|| FormatError::new(ptr, "expected a string"))
}

fn optional_string(obj: &Map<String, Value>, ptr: &str, key: &str) -> Result<Option<String>, FormatError> {
    obj.get(key).map(|v| string(v, &format!("{ptr}/{key}"))).transpose()
}

fn parse_sort(v: &Value, ptr: &str) -> Result<Sort, FormatError> {
    match v {
        Value::String(s) => match s.as_str() {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "Real" => Ok(Sort::Real),
            other => Err(FormatError::new(ptr, format!("unknown sort `{other}`"))),
        },
        Value::Object(o) => Ok(Sort::Datatype(string(field(o, ptr, "datatype")?, &format!("{ptr}/datatype"))?)),
        _ => Err(FormatError::new(ptr, "expected a sort name or {\"datatype\": name}")),
    }
}

pub fn load_str(text: &str) -> Result<PolicyModel, FormatError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| FormatError::new("", e.to_string()))?;
    let root = object(&doc, "")?;
    let mut model = PolicyModel::new();

    for (i, d) in array(field(root, "", "datatypes")?, "/datatypes")?.iter().enumerate() {
        let ptr = format!("/datatypes/{i}");
        let o = object(d, &ptr)?;
        let name = string(field(o, &ptr, "name")?, &format!("{ptr}/name"))?;
        let cptr = format!("{ptr}/constructors");
        let constructors = array(field(o, &ptr, "constructors")?, &cptr)?
            .iter()
            .enumerate()
            .map(|(j, c)| string(c, &format!("{cptr}/{j}")))
            .collect::<Result<_, _>>()?;
        model.datatypes.push(DatatypeDecl { name, constructors });
    }

    for (i, v) in array(field(root, "", "variables")?, "/variables")?.iter().enumerate() {
        let ptr = format!("/variables/{i}");
        let o = object(v, &ptr)?;
        let name = string(field(o, &ptr, "name")?, &format!("{ptr}/name"))?;
        let sort = parse_sort(field(o, &ptr, "sort")?, &format!("{ptr}/sort"))?;
        let description = string(field(o, &ptr, "description")?, &format!("{ptr}/description"))?;
        let provenance = match o.get("provenance") {
            None => Vec::new(),
            Some(p) => array(p, &format!("{ptr}/provenance"))?
                .iter()
                .enumerate()
                .map(|(j, s)| string(s, &format!("{ptr}/provenance/{j}")))
                .collect::<Result<_, _>>()?,
        };
        model.variables.push(VariableSpec { name, sort, description, provenance });
    }

    let env = model.env().map_err(|e| {
        let ptr = declaration_pointer(&model, &e);
        FormatError::new(ptr, e.to_string())
    })?;

    for (i, r) in array(field(root, "", "rules")?, "/rules")?.iter().enumerate() {
        let ptr = format!("/rules/{i}");
        let o = object(r, &ptr)?;
        let id = string(field(o, &ptr, "id")?, &format!("{ptr}/id"))?;
        let text = string(field(o, &ptr, "smtlib")?, &format!("{ptr}/smtlib"))?;
        let term = parse_formula(&text, &env).map_err(|e| {
            let message = match &e {
                LogicError::UnknownSymbol { name, .. } => format!("undeclared variable `{name}`: {e}"),
                _ => e.to_string(),
            };
            FormatError::new(format!("{ptr}/smtlib"), message)
        })?;
        let provenance = optional_string(o, &ptr, "provenance")?;
        model.rules.push(Rule { id, term, provenance });
    }

    if let Some(meta) = root.get("metadata") {
        let mo = object(meta, "/metadata")?;
        if let Some(v) = mo.get("vetted") {
            let so = object(v, "/metadata/vetted")?;
            model.vetted = Some(VettedStamp {
                by: optional_string(so, "/metadata/vetted", "by")?,
                at: optional_string(so, "/metadata/vetted", "at")?,
                suite: optional_string(so, "/metadata/vetted", "suite")?,
            });
        }
    }

    model.validate().map_err(|e| {
        let ptr = match &e {
            ModelError::DuplicateRuleId(id) | ModelError::Rule { id, .. } => rule_pointer(&model, id),
            ModelError::DuplicateRule { second, .. } => rule_pointer(&model, second),
            ModelError::EmptyDescription(n) => model
                .variables
                .iter()
                .position(|v| &v.name == n)
                .map(|i| format!("/variables/{i}/description"))
                .unwrap_or_default(),
            ModelError::Declaration(_) => declaration_pointer(&model, &e),
        };
        FormatError::new(ptr, e.to_string())
    })?;
    Ok(model)
}

fn rule_pointer(model: &PolicyModel, id: &str) -> String {
    model.rules.iter().rposition(|r| r.id == id).map(|i| format!("/rules/{i}")).unwrap_or_default()
}

/// Best-effort location of a declaration error: the last entry whose name
/// the message mentions.
fn declaration_pointer(model: &PolicyModel, e: &ModelError) -> String {
    let msg = e.to_string();
    let mentions = |n: &str| msg.contains(&format!("`{n}`"));
    if let Some(i) = model.variables.iter().rposition(|v| mentions(&v.name) || mentions(&v.sort.to_string())) {
        return format!("/variables/{i}");
    }
    if let Some(i) =
        model.datatypes.iter().rposition(|d| mentions(&d.name) || d.constructors.iter().any(|c| mentions(c)))
    {
        return format!("/datatypes/{i}");
    }
    String::new()
}
