//! Mechanical rendering of rules as structured English.

use crate::logic::{Op, Term};
use crate::policy::{PolicyModel, Rule};

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match (chars.next(), chars.clone().next()) {
        // Leave acronyms such as "VIP" alone.
        (Some(a), Some(b)) if a.is_uppercase() && !b.is_uppercase() => a.to_lowercase().chain(chars).collect(),
        _ => s.to_string(),
    }
}

struct Renderer<'a> {
    model: &'a PolicyModel,
}

impl Renderer<'_> {
    fn var(&self, name: &str) -> String {
        match self.model.variable(name) {
            Some(v) if !v.description.trim().is_empty() => lower_first(v.description.trim().trim_end_matches('.')),
            _ => name.to_string(),
        }
    }

    fn compound(t: &Term) -> bool {
        matches!(t, Term::And(_) | Term::Or(_) | Term::Implies(..) | Term::Apply(..) | Term::Not(_))
    }

    /// Renders `t`, parenthesized when it is compound.
    fn operand(&self, t: &Term) -> String {
        let s = self.term(t);
        if Self::compound(t) {
            format!("({s})")
        } else {
            s
        }
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Var(n) => self.var(n),
            Term::Constructor(c) => c.clone(),
            Term::Int(i) => i.to_string(),
            Term::Real(d) => d.to_string(),
            Term::Bool(b) => if *b { "true" } else { "false" }.to_string(),
            Term::Not(inner) => format!("it is not the case that {}", self.operand(inner)),
            Term::And(ts) => ts.iter().map(|x| self.operand(x)).collect::<Vec<_>>().join(" and "),
            Term::Or(ts) => ts.iter().map(|x| self.operand(x)).collect::<Vec<_>>().join(" or "),
            Term::Implies(a, b) => format!("if {}, then {}", self.operand(a), self.operand(b)),
            Term::Apply(op, a, b) => {
                let word = match op {
                    Op::Add => "plus",
                    Op::Sub => "minus",
                    Op::Mul => "times",
                    Op::Div => "divided by",
                    Op::Eq => match **b {
                        Term::Constructor(_) => "is",
                        _ => "equals",
                    },
                    Op::Gt => "is greater than",
                    Op::Lt => "is less than",
                    Op::Le => "is at most",
                    Op::Ge => "is at least",
                };
                // Top-level operands of a comparison need no parentheses
                // unless they are themselves comparisons or connectives.
                let side = |x: &Term| match x {
                    Term::Apply(inner, ..) if inner.is_arithmetic() && !op.is_arithmetic() => self.term(x),
                    _ => self.operand(x),
                };
                format!("{} {word} {}", side(a), side(b))
            }
        }
    }
}

/// Renders a rule. Implications read "if ..., then ..."; a rule that is a
/// single Boolean variable reads "it holds that: ...".
pub fn render_structured_english(rule: &Rule, model: &PolicyModel) -> String {
    let r = Renderer { model };
    match &rule.term {
        Term::Var(n) => format!("it holds that: {}", r.var(n)),
        Term::Implies(a, b) => {
            // The outermost implication reads without parentheses.
            let part = |x: &Term| match x {
                Term::Apply(..) | Term::And(_) | Term::Not(_) => r.term(x),
                _ => r.operand(x),
            };
            format!("if {}, then {}", part(a), part(b))
        }
        other => r.term(other),
    }
}
