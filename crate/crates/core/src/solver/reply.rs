//! Interpretation of model, core and reason replies.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::logic::sexpr::{parse_one, Atom, SExpr};
use crate::logic::{Decimal, Env, Sort, Value};

/// Reads a solver value of the expected sort; anything outside the exact
/// rationals, constructors and Booleans is kept verbatim as opaque.
pub(crate) fn value_of(e: &SExpr, sort: &Sort, env: &Env) -> Value {
    let opaque = || Value::Opaque(e.to_string());
    match sort {
        Sort::Bool => match e.as_symbol() {
            Some("true") => Value::Bool(true),
            Some("false") => Value::Bool(false),
            _ => opaque(),
        },
        Sort::Int => match rational(e) {
            Some(r) if r.is_integer() => Value::Int(r.to_integer()),
            _ => opaque(),
        },
        Sort::Real => rational(e).map(Value::Real).unwrap_or_else(opaque),
        Sort::Datatype(dt) => {
            let name = match e {
                SExpr::List(items, _) if items.len() == 3 && items[0].as_symbol() == Some("as") => items[1].as_symbol(),
                _ => e.as_symbol(),
            };
            match name {
                Some(c) if env.constructor_datatype(c) == Some(dt.as_str()) => Value::Constructor(c.to_string()),
                _ => opaque(),
            }
        }
    }
}

fn rational(e: &SExpr) -> Option<BigRational> {
    match e {
        SExpr::Atom(Atom::Numeral(n), _) => n.parse::<BigInt>().ok().map(BigRational::from_integer),
        SExpr::Atom(Atom::Decimal(d), _) => d.parse::<Decimal>().ok().map(|d| d.to_rational()),
        SExpr::List(items, _) => match (items.first().and_then(SExpr::as_symbol), items.len()) {
            (Some("-"), 2) => rational(&items[1]).map(|r| -r),
            (Some("-"), 3) => Some(rational(&items[1])? - rational(&items[2])?),
            (Some("+"), 3) => Some(rational(&items[1])? + rational(&items[2])?),
            (Some("*"), 3) => Some(rational(&items[1])? * rational(&items[2])?),
            (Some("/"), 3) => {
                let d = rational(&items[2])?;
                if d.is_zero() {
                    return None;
                }
                Some(rational(&items[1])? / d)
            }
            _ => None,
        },
        _ => None,
    }
}

/// Extracts `define-fun` bindings of declared constants from a model.
pub(crate) fn parse_model(text: &str, env: &Env) -> Result<BTreeMap<String, Value>, String> {
    let root = parse_one(text).map_err(|e| e.to_string())?;
    let mut items = root.as_list().ok_or("model is not a list")?;
    if items.first().and_then(SExpr::as_symbol) == Some("model") {
        items = &items[1..];
    }
    let mut out = BTreeMap::new();
    for def in items {
        let Some(parts) = def.as_list() else { return Err(format!("unexpected model entry `{def}`")) };
        if parts.len() != 5 || parts[0].as_symbol() != Some("define-fun") {
            continue;
        }
        let Some(name) = parts[1].as_symbol() else { continue };
        if parts[2].as_list().is_none_or(|args| !args.is_empty()) {
            continue;
        }
        if let Some(sort) = env.const_sort(name) {
            out.insert(name.to_string(), value_of(&parts[4], sort, env));
        }
    }
    Ok(out)
}

pub(crate) fn parse_core(text: &str) -> Result<Vec<String>, String> {
    let root = parse_one(text).map_err(|e| e.to_string())?;
    let items = root.as_list().ok_or("core is not a list")?;
    items.iter().map(|i| i.as_symbol().map(str::to_string).ok_or_else(|| format!("bad core label `{i}`"))).collect()
}

/// `(:reason-unknown "timeout")` → `timeout`.
pub(crate) fn parse_reason(text: &str) -> String {
    match parse_one(text) {
        Ok(SExpr::List(items, _)) if items.len() == 2 => match &items[1] {
            SExpr::Atom(Atom::Str(s), _) => s.clone(),
            other => other.to_string(),
        },
        _ => text.to_string(),
    }
}
