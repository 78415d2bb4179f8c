//! Chat-completions client for OpenAI-compatible endpoints.

use std::path::PathBuf;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::prompts::{extract_fenced, render, split_exprs, Templates};
use super::{
    vocabulary, PolicyRepairRequest, RawTranslation, RepairKind, RepairRequest, RevisionRequest, Translator,
    TranslatorError,
};
use crate::policy::PolicyModel;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub name: Option<String>,
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Environment variable holding the bearer token. No header is sent
    /// when it is unset.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Directory of prompt overrides for this backend.
    pub templates: Option<PathBuf>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            name: None,
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            temperature: 0.0,
            max_tokens: 2048,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
            templates: None,
        }
    }
}

pub struct HttpTranslator {
    name: String,
    config: HttpConfig,
    templates: Templates,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(config: HttpConfig) -> Result<Self, TranslatorError> {
        let templates = match &config.templates {
            Some(dir) => Templates::from_dir(dir)
                .map_err(|e| TranslatorError::BackendUnavailable(format!("templates in {}: {e}", dir.display())))?,
            None => Templates::default(),
        };
        Ok(Self::with_templates(config, templates))
    }

    pub fn with_templates(config: HttpConfig, templates: Templates) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(config.timeout_secs)).build();
        let name = config.name.clone().unwrap_or_else(|| format!("http:{}", config.model));
        Self { name, config, templates, agent }
    }

    fn complete(&self, prompt: &str) -> Result<String, TranslatorError> {
        let unavailable = |m: String| TranslatorError::BackendUnavailable(format!("{}: {m}", self.name));
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut request = self.agent.post(&self.config.endpoint);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let reply: serde_json::Value = match request.send_json(body) {
            Ok(r) => r.into_json().map_err(|e| unavailable(format!("unreadable reply: {e}")))?,
            Err(ureq::Error::Status(code, r)) => {
                let text = r.into_string().unwrap_or_default();
                return Err(unavailable(format!("HTTP {code}: {}", text.chars().take(200).collect::<String>())));
            }
            Err(e) => return Err(unavailable(e.to_string())),
        };
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| unavailable("reply has no choices[0].message.content".into()))
    }

    /// The first non-`untranslatable` fenced block, or nothing.
    fn code(&self, prompt: &str) -> Result<String, TranslatorError> {
        let reply = self.complete(prompt)?;
        Ok(extract_fenced(&reply).into_iter().find(|(tag, _)| tag != "untranslatable").map(|b| b.1).unwrap_or_default())
    }
}

impl Translator for HttpTranslator {
    fn name(&self) -> &str {
        &self.name
    }

    fn translate_claims(&self, text: &str, model: &PolicyModel) -> Result<RawTranslation, TranslatorError> {
        let vocab = vocabulary(model);
        let prompt = render(&self.templates.claims, &[("vocabulary", &vocab), ("text", text)]);
        let reply = self.complete(&prompt)?;
        let mut out = RawTranslation::default();
        for (tag, body) in extract_fenced(&reply) {
            if tag == "untranslatable" {
                out.untranslatable.extend(body.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string));
            } else {
                out.claims.extend(split_exprs(&body));
            }
        }
        Ok(out)
    }

    fn formalize_span(&self, span: &str, context: &PolicyModel) -> Result<String, TranslatorError> {
        let vocab = vocabulary(context);
        self.code(&render(&self.templates.span, &[("vocabulary", &vocab), ("span", span)]))
    }

    fn repair(&self, request: &RepairRequest<'_>) -> Result<String, TranslatorError> {
        let kind = match request.kind {
            RepairKind::Claim => "claim",
            RepairKind::Span => "formalization",
            RepairKind::Policy => "policy repair",
        };
        self.code(&render(
            &self.templates.repair,
            &[
                ("kind", kind),
                ("output", request.output),
                ("diagnostic", request.diagnostic),
                ("context", request.context),
            ],
        ))
    }

    fn revise_answer(&self, request: &RevisionRequest<'_>) -> Result<String, TranslatorError> {
        self.complete(&render(
            &self.templates.revise,
            &[
                ("domain", request.domain),
                ("source_text", request.source_text),
                ("question", request.question),
                ("original_answer", request.answer),
                ("feedback", request.feedback),
            ],
        ))
    }

    fn repair_policy(&self, request: &PolicyRepairRequest<'_>) -> Result<String, TranslatorError> {
        let model = request.model.to_smtlib();
        self.code(&render(
            &self.templates.policy_repair,
            &[("model", &model), ("rule_id", request.rule_id), ("feedback", request.feedback)],
        ))
    }
}
