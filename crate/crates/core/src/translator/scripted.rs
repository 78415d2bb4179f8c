//! Offline backend answering from JSON fixtures keyed by input digest.
//!
//! A fixture file has optional sections `claims`, `spans`, `repairs`,
//! `revisions` and `policy_repairs`, each mapping a key to an output. A key
//! is the SHA-256 hex digest of the trimmed input (claim text, span text,
//! invalid output, original answer, feedback respectively), or
//! `text:<input>` which is hashed on load. A file without any section is
//! read as a bare `claims` map.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{PolicyRepairRequest, RawTranslation, RepairRequest, RevisionRequest, Translator, TranslatorError};
use crate::policy::PolicyModel;

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.trim().as_bytes()))
}

#[derive(Debug, Clone, Deserialize)]
struct FixturePair {
    #[serde(default)]
    premise: Option<String>,
    conclusion: String,
}

#[derive(Debug, Clone, Deserialize, Default)]
struct FixtureTranslation {
    #[serde(default)]
    pairs: Vec<FixturePair>,
    /// Raw claim texts, passed to the gate verbatim (for malformed cases).
    #[serde(default)]
    raw: Vec<String>,
    #[serde(default)]
    untranslatable: Vec<String>,
}

#[derive(Debug, Deserialize, Default)]
struct FixtureFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    claims: HashMap<String, FixtureTranslation>,
    #[serde(default)]
    spans: HashMap<String, String>,
    #[serde(default)]
    repairs: HashMap<String, String>,
    #[serde(default)]
    revisions: HashMap<String, String>,
    #[serde(default)]
    policy_repairs: HashMap<String, String>,
}

const SECTIONS: &[&str] = &["name", "claims", "spans", "repairs", "revisions", "policy_repairs"];

#[derive(Debug, Clone, Default)]
pub struct ScriptedTranslator {
    name: String,
    available: bool,
    claims: HashMap<String, FixtureTranslation>,
    spans: HashMap<String, String>,
    repairs: HashMap<String, String>,
    revisions: HashMap<String, String>,
    policy_repairs: HashMap<String, String>,
}

fn rekey<V>(map: HashMap<String, V>) -> HashMap<String, V> {
    map.into_iter()
        .map(|(k, v)| match k.strip_prefix("text:") {
            Some(text) => (digest(text), v),
            None => (k, v),
        })
        .collect()
}

impl ScriptedTranslator {
    /// A backend that refuses every call.
    pub fn unavailable(name: &str) -> Self {
        Self { name: name.into(), available: false, ..Self::default() }
    }

    pub fn from_json(name: &str, text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let bare =
            value.as_object().is_some_and(|o| !o.is_empty() && !o.keys().any(|k| SECTIONS.contains(&k.as_str())));
        let file: FixtureFile = if bare {
            FixtureFile { claims: serde_json::from_value(value).map_err(|e| e.to_string())?, ..Default::default() }
        } else {
            serde_json::from_value(value).map_err(|e| e.to_string())?
        };
        Ok(Self {
            name: file.name.unwrap_or_else(|| name.to_string()),
            available: true,
            claims: rekey(file.claims),
            spans: rekey(file.spans),
            repairs: rekey(file.repairs),
            revisions: rekey(file.revisions),
            policy_repairs: rekey(file.policy_repairs),
        })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scripted");
        Self::from_json(stem, &text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// One backend per `*.json` file in `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>, String> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(format!("{}: no fixture files", dir.display()));
        }
        paths.iter().map(|p| Self::load(p)).collect()
    }

    fn lookup<'a, V>(&self, map: &'a HashMap<String, V>, what: &str, input: &str) -> Result<&'a V, TranslatorError> {
        if !self.available {
            return Err(TranslatorError::BackendUnavailable(format!("{} is offline", self.name)));
        }
        let key = digest(input);
        map.get(&key).ok_or_else(|| {
            TranslatorError::BackendUnavailable(format!("{}: no {what} fixture for digest {key}", self.name))
        })
    }
}

impl Translator for ScriptedTranslator {
    fn name(&self) -> &str {
        &self.name
    }

    fn translate_claims(&self, text: &str, _model: &PolicyModel) -> Result<RawTranslation, TranslatorError> {
        let t = self.lookup(&self.claims, "claims", text)?;
        let mut claims: Vec<String> = t
            .pairs
            .iter()
            .map(|p| {
                let premise = p.premise.as_deref().filter(|s| !s.trim().is_empty()).unwrap_or("true");
                format!("(claim {premise} {})", p.conclusion)
            })
            .collect();
        claims.extend(t.raw.iter().cloned());
        Ok(RawTranslation { claims, untranslatable: t.untranslatable.clone() })
    }

    fn formalize_span(&self, span: &str, _context: &PolicyModel) -> Result<String, TranslatorError> {
        self.lookup(&self.spans, "span", span).cloned()
    }

    fn repair(&self, request: &RepairRequest<'_>) -> Result<String, TranslatorError> {
        self.lookup(&self.repairs, "repair", request.output).cloned()
    }

    fn revise_answer(&self, request: &RevisionRequest<'_>) -> Result<String, TranslatorError> {
        self.lookup(&self.revisions, "revision", request.answer).cloned()
    }

    fn repair_policy(&self, request: &PolicyRepairRequest<'_>) -> Result<String, TranslatorError> {
        self.lookup(&self.policy_repairs, "policy repair", request.feedback).cloned()
    }
}
