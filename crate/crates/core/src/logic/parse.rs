//! Parsing SMT-LIB text into checked terms and scripts.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;

use super::env::{Env, LogicError};
use super::number::Decimal;
use super::sexpr::{self, Atom, Reader, SExpr, Span, SyntaxError};
use super::term::{is_identifier, DatatypeDecl, Declaration, Op, Term};

/// Parses and sort-checks a term of any sort.
pub fn parse_term(text: &str, env: &Env) -> Result<Term, LogicError> {
    let expr = sexpr::parse_one(text)?;
    let term = build(text, &expr, env)?;
    env.sort_of(&term).map_err(|e| locate(e, &expr))?;
    Ok(term)
}

/// Parses a term and requires it to be Bool-sorted.
pub fn parse_formula(text: &str, env: &Env) -> Result<Term, LogicError> {
    let expr = sexpr::parse_one(text)?;
    formula_from_sexpr(text, &expr, env)
}

fn formula_from_sexpr(text: &str, expr: &SExpr, env: &Env) -> Result<Term, LogicError> {
    let term = build(text, expr, env)?;
    env.check_formula(&term).map_err(|e| locate(e, expr))?;
    Ok(term)
}

/// Attaches a source offset to a sort error by walking the s-expression
/// along the error's child path.
fn locate(err: LogicError, root: &SExpr) -> LogicError {
    let LogicError::Sort(mut se) = err else { return err };
    let mut node = root;
    for &child in &se.path {
        let Some(items) = node.as_list() else { break };
        let unary_minus = items.len() == 2 && items[0].as_symbol() == Some("-");
        node = match (unary_minus, child) {
            (true, 0) => node,
            (true, _) => &items[1],
            (false, i) => match items.get(i + 1) {
                Some(n) => n,
                None => break,
            },
        };
    }
    se.offset = Some(node.span().start);
    LogicError::Sort(se)
}

fn syntax(text: &str, span: Span, msg: impl Into<String>) -> LogicError {
    SyntaxError::at(text, span.start, msg).into()
}

fn build(text: &str, expr: &SExpr, env: &Env) -> Result<Term, LogicError> {
    match expr {
        SExpr::Atom(atom, span) => match atom {
            Atom::Numeral(digits) => Ok(Term::Int(
                digits.parse::<BigUint>().map_err(|_| syntax(text, *span, format!("malformed numeral `{digits}`")))?,
            )),
            Atom::Decimal(d) => Ok(Term::Real(
                d.parse::<Decimal>().map_err(|_| syntax(text, *span, format!("malformed decimal `{d}`")))?,
            )),
            Atom::Symbol { quoted: true, name } => {
                Err(syntax(text, *span, format!("quoted symbol `|{name}|` is not supported")))
            }
            Atom::Symbol { name, .. } => match name.as_str() {
                "true" => Ok(Term::Bool(true)),
                "false" => Ok(Term::Bool(false)),
                n if env.const_sort(n).is_some() => Ok(Term::Var(n.to_string())),
                n if env.constructor_datatype(n).is_some() => Ok(Term::Constructor(n.to_string())),
                n if is_identifier(n) => Err(LogicError::UnknownSymbol {
                    name: n.to_string(),
                    suggestion: env.suggest(n),
                    offset: Some(span.start),
                }),
                n => Err(syntax(text, *span, format!("`{n}` is not a term of the fragment"))),
            },
            Atom::Str(_) => Err(syntax(text, *span, "string literals are not supported")),
            Atom::Keyword(k) => Err(syntax(text, *span, format!("unexpected keyword `:{k}`"))),
        },
        SExpr::List(items, span) => {
            let Some((head, args)) = items.split_first() else {
                return Err(syntax(text, *span, "empty application `()`"));
            };
            let Some(op) =
                head.as_symbol().filter(|_| matches!(head, SExpr::Atom(Atom::Symbol { quoted: false, .. }, _)))
            else {
                return Err(syntax(text, head.span(), "application head must be an operator"));
            };
            let mut sub = |e: &SExpr| build(text, e, env);
            match op {
                "and" | "or" => {
                    if args.len() < 2 {
                        return Err(syntax(text, *span, format!("`{op}` needs at least two arguments")));
                    }
                    let ts = args.iter().map(&mut sub).collect::<Result<Vec<_>, _>>()?;
                    Ok(if op == "and" { Term::And(ts) } else { Term::Or(ts) })
                }
                "not" => {
                    if args.len() != 1 {
                        return Err(syntax(text, *span, "`not` takes exactly one argument"));
                    }
                    Ok(Term::not(sub(&args[0])?))
                }
                "=>" => {
                    if args.len() != 2 {
                        return Err(syntax(text, *span, "`=>` takes exactly two arguments"));
                    }
                    Ok(Term::implies(sub(&args[0])?, sub(&args[1])?))
                }
                "-" if args.len() == 1 => Ok(Term::apply(Op::Sub, Term::int(0), sub(&args[0])?)),
                _ => {
                    let Some(op) = Op::from_symbol(op) else {
                        let what = match op {
                            "forall" | "exists" => "quantifiers are",
                            "let" => "let-bindings are",
                            "!" => "annotations are",
                            _ => "function applications are",
                        };
                        return Err(syntax(
                            text,
                            head.span(),
                            format!("`{op}`: {what} not supported in this fragment"),
                        ));
                    };
                    if args.len() != 2 {
                        return Err(syntax(text, *span, format!("`{}` takes exactly two arguments", op.symbol())));
                    }
                    Ok(Term::apply(op, sub(&args[0])?, sub(&args[1])?))
                }
            }
        }
    }
}

/// Declarations followed by assertions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub declarations: Vec<Declaration>,
    pub assertions: Vec<Term>,
    /// The `;` comment trailing or directly following each `declare-const`.
    pub descriptions: BTreeMap<String, String>,
    /// Names re-declared identically to the base environment; such
    /// declarations are dropped rather than rejected.
    pub reused: Vec<String>,
}

impl Script {
    pub fn env(&self) -> Result<Env, LogicError> {
        Ok(Env::from_declarations(&self.declarations)?)
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        for a in &self.assertions {
            writeln!(f, "(assert {a})")?;
        }
        Ok(())
    }
}

/// Commands a formalizer may emit that carry no content; they are skipped.
const IGNORED_COMMANDS: &[&str] = &["set-logic", "set-option", "set-info", "check-sat", "get-model", "exit"];

/// Parses a script of declarations and assertions.
pub fn parse_script(text: &str) -> Result<Script, LogicError> {
    parse_script_in(text, &Env::new()).map(|(s, _)| s)
}

/// Parses a script whose assertions may also refer to names in `base`.
/// Returns the script and the combined environment.
pub fn parse_script_in(text: &str, base: &Env) -> Result<(Script, Env), LogicError> {
    let mut reader = Reader::new(text);
    let mut env = base.clone();
    let mut script = Script::default();
    let mut const_spans: Vec<(String, Span)> = Vec::new();
    let mut seen_assert = false;
    while let Some(cmd) = reader.next_expr()? {
        let span = cmd.span();
        let Some(items) = cmd.as_list().filter(|i| !i.is_empty()) else {
            return Err(syntax(text, span, "expected a command"));
        };
        let head = items[0].as_symbol().unwrap_or_default();
        match head {
            "declare-datatype" | "declare-datatypes" | "declare-const" if seen_assert => {
                return Err(syntax(text, span, "declarations must precede assertions"));
            }
            "declare-datatype" | "declare-datatypes" => {
                let decls = if head == "declare-datatype" {
                    vec![datatype_decl(text, items, span)?]
                } else {
                    legacy_datatypes(text, items, span)?
                };
                for decl in decls {
                    if base.datatype(&decl.name) == Some(decl.constructors.as_slice()) {
                        script.reused.push(decl.name);
                        continue;
                    }
                    env.declare_datatype(decl.clone())?;
                    script.declarations.push(Declaration::Datatype(decl));
                }
            }
            "declare-const" => {
                let [_, name, sort] = items else {
                    return Err(syntax(text, span, "expected (declare-const name sort)"));
                };
                let (Some(name), Some(sort_name)) = (name.as_symbol(), sort.as_symbol()) else {
                    return Err(syntax(text, span, "expected (declare-const name sort)"));
                };
                let sort = env.resolve_sort(sort_name).ok_or_else(|| {
                    LogicError::Declaration(super::env::DeclarationError::UnknownSort(sort_name.to_string()))
                })?;
                if base.const_sort(name) == Some(&sort) {
                    script.reused.push(name.to_string());
                    continue;
                }
                env.declare_const(name.to_string(), sort.clone())?;
                script.declarations.push(Declaration::Const { name: name.to_string(), sort });
                const_spans.push((name.to_string(), span));
            }
            "assert" => {
                seen_assert = true;
                let [_, body] = items else {
                    return Err(syntax(text, span, "expected (assert term)"));
                };
                script.assertions.push(formula_from_sexpr(text, body, &env)?);
            }
            h if IGNORED_COMMANDS.contains(&h) => {}
            other => {
                return Err(syntax(text, span, format!("unsupported command `{other}`")));
            }
        }
    }
    for (name, span) in const_spans {
        // Same line, or the next comment with only whitespace in between.
        if let Some(c) = reader
            .comments()
            .iter()
            .find(|c| c.span.start >= span.end && text[span.end..c.span.start].trim().is_empty())
        {
            if !c.text.is_empty() {
                script.descriptions.insert(name, c.text.clone());
            }
        }
    }
    Ok((script, env))
}

fn symbol_list(text: &str, expr: &SExpr) -> Result<Vec<String>, LogicError> {
    let Some(items) = expr.as_list() else {
        return Err(syntax(text, expr.span(), "expected a constructor list"));
    };
    items
        .iter()
        .map(|item| {
            // Accept both `(A B)` and the standard `((A) (B))`.
            let sym = match item.as_list() {
                Some([only]) => only.as_symbol(),
                Some(_) => None,
                None => item.as_symbol(),
            };
            sym.map(str::to_string).ok_or_else(|| syntax(text, item.span(), "constructors must be nullary symbols"))
        })
        .collect()
}

fn datatype_decl(text: &str, items: &[SExpr], span: Span) -> Result<DatatypeDecl, LogicError> {
    let [_, name, ctors] = items else {
        return Err(syntax(text, span, "expected (declare-datatype name (constructors))"));
    };
    let Some(name) = name.as_symbol() else {
        return Err(syntax(text, name.span(), "datatype name must be a symbol"));
    };
    Ok(DatatypeDecl { name: name.to_string(), constructors: symbol_list(text, ctors)? })
}

/// `(declare-datatypes () ((Name A B)))`, the SMT-LIB 2.0 form.
fn legacy_datatypes(text: &str, items: &[SExpr], span: Span) -> Result<Vec<DatatypeDecl>, LogicError> {
    let bad = || syntax(text, span, "expected (declare-datatypes () ((Name C1 C2 ...)))");
    let [_, params, defs] = items else { return Err(bad()) };
    if params.as_list().map(|p| !p.is_empty()).unwrap_or(true) {
        return Err(bad());
    }
    let defs = defs.as_list().ok_or_else(bad)?;
    defs.iter()
        .map(|d| {
            let parts = d.as_list().ok_or_else(bad)?;
            let (name, ctors) = parts.split_first().ok_or_else(bad)?;
            let name = name.as_symbol().ok_or_else(bad)?;
            let constructors =
                ctors.iter().map(|c| c.as_symbol().map(str::to_string).ok_or_else(bad)).collect::<Result<_, _>>()?;
            Ok(DatatypeDecl { name: name.to_string(), constructors })
        })
        .collect()
}
