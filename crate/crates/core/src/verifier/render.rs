//! JSON and plain-text renderings of findings.

use serde_json::{json, Map, Value as Json};

use super::{Category, Finding, Side};
use crate::logic::{Assignment, Value};
use crate::policy::PolicyModel;

fn value_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(*b),
        other => Json::String(other.to_string()),
    }
}

/// `{"values": {...}, "arbitrary": [...]}`; numbers are exact strings.
pub fn assignment_json(a: &Assignment) -> Json {
    let values: Map<String, Json> = a.bindings.iter().map(|(k, v)| (k.clone(), value_json(v))).collect();
    json!({ "values": values, "arbitrary": a.arbitrary.iter().collect::<Vec<_>>() })
}

pub fn finding_json(f: &Finding) -> Json {
    let mut out = Map::new();
    out.insert("category".into(), json!(f.category));
    let pair = f.pair.as_ref();
    out.insert(
        "confidence".into(),
        pair.and_then(|p| p.confidence).map_or(Json::Null, |c| json!({ "num": c.num, "den": c.den })),
    );
    out.insert("premise".into(), pair.map_or(Json::Null, |p| json!(p.premise.to_string())));
    out.insert("conclusion".into(), pair.map_or(Json::Null, |p| json!(p.conclusion.to_string())));
    let fb = &f.feedback;
    out.insert("relevant_rules".into(), json!(fb.relevant_rules));
    if let Some(a) = &fb.scenario {
        out.insert("scenario".into(), assignment_json(a));
    }
    if let Some(a) = &fb.counter_example {
        out.insert("counter_example".into(), assignment_json(a));
    }
    if !fb.more_scenarios.is_empty() {
        out.insert("more_scenarios".into(), fb.more_scenarios.iter().map(assignment_json).collect());
    }
    if !fb.more_counter_examples.is_empty() {
        out.insert("more_counter_examples".into(), fb.more_counter_examples.iter().map(assignment_json).collect());
    }
    if let Some(d) = &fb.differing {
        out.insert(
            "differing_translation".into(),
            json!({
                "premise": d.other.premise.to_string(),
                "conclusion": d.other.conclusion.to_string(),
                "assignment": assignment_json(&d.distinction.assignment),
                "satisfies": match d.distinction.satisfies { Side::A => "this", Side::B => "other" },
            }),
        );
    }
    if !fb.untranslatable.is_empty() {
        out.insert("untranslatable".into(), json!(fb.untranslatable));
    }
    out.insert("warnings".into(), json!(fb.warnings));
    if let Some(r) = &fb.reason {
        out.insert("reason".into(), json!(r));
    }
    out.insert("audit_transcript".into(), json!(f.audit_transcript.as_ref().map(|p| p.display().to_string())));
    Json::Object(out)
}

pub fn findings_json(findings: &[Finding]) -> Json {
    Json::Array(findings.iter().map(finding_json).collect())
}

fn bindings(a: &Assignment) -> String {
    let shown: Vec<String> =
        a.bindings.iter().filter(|(k, _)| !a.arbitrary.contains(*k)).map(|(k, v)| format!("{k} = {v}")).collect();
    if shown.is_empty() {
        "(any values)".into()
    } else {
        shown.join(", ")
    }
}

fn summary(c: Category) -> &'static str {
    match c {
        Category::NoTranslations => "Nothing in the text could be expressed in the policy's terms.",
        Category::TooComplex => "The check was abandoned before reaching a verdict.",
        Category::TranslationAmbiguous => "The translators disagreed about what the text claims.",
        Category::Impossible => "The stated conditions cannot all hold under the policy.",
        Category::Invalid => "Under the stated conditions the policy rules out the conclusion.",
        Category::Satisfiable => {
            "The conclusion is possible under the stated conditions, but the policy does not force it."
        }
        Category::Valid => "Under the stated conditions the policy guarantees the conclusion.",
    }
}

/// Plain-text feedback for one finding, suitable for a revision prompt.
/// Rule bodies are quoted from `model` with variable descriptions.
pub fn render_feedback(f: &Finding, model: &PolicyModel) -> String {
    let mut lines = vec![format!("Finding: {}", f.category)];
    if let Some(p) = &f.pair {
        if let Some(c) = p.confidence {
            lines.push(format!("Translation confidence: {c}"));
        }
        lines.push(format!("Premise: {}", p.premise));
        lines.push(format!("Conclusion: {}", p.conclusion));
    }
    lines.push(summary(f.category).to_string());
    let fb = &f.feedback;
    if let Some(r) = &fb.reason {
        lines.push(format!("Reason: {r}"));
    }
    if !fb.relevant_rules.is_empty() {
        lines.push("Relevant rules:".into());
        for id in &fb.relevant_rules {
            match model.rule(id) {
                Some(r) => lines.push(format!("  [{id}] {}", r.term)),
                None => lines.push(format!("  [{id}]")),
            }
        }
    }
    if let Some(a) = &fb.scenario {
        lines.push(format!("A situation where the conclusion holds: {}", bindings(a)));
    }
    if let Some(a) = &fb.counter_example {
        lines.push(format!("A situation where the conclusion fails: {}", bindings(a)));
    }
    if let Some(d) = &fb.differing {
        lines.push(format!("Another translation read it as: {} => {}", d.other.premise, d.other.conclusion));
        lines.push(format!("The readings differ on: {}", bindings(&d.distinction.assignment)));
    }
    if !fb.untranslatable.is_empty() {
        lines.push(format!("Not covered by the policy: {}", fb.untranslatable.join(" | ")));
    }
    for w in &fb.warnings {
        lines.push(format!("Warning: the {:?} is {:?} regardless of the policy", w.subject, w.kind).to_lowercase());
    }
    let mentioned: Vec<&str> = fb
        .scenario
        .iter()
        .chain(fb.counter_example.iter())
        .flat_map(|a| a.bindings.keys().filter(|k| !a.arbitrary.contains(*k)))
        .map(String::as_str)
        .collect();
    let mut described: Vec<String> = Vec::new();
    for v in &model.variables {
        if mentioned.contains(&v.name.as_str()) {
            described.push(format!("  {}: {}", v.name, v.description));
        }
    }
    if !described.is_empty() {
        lines.push("Where:".into());
        lines.extend(described);
    }
    lines.join("\n")
}
