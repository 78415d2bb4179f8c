//! The TOML configuration file and environment overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use policyguard::formalizer::BuildConfig;
use policyguard::solver::SolverConfig;
use policyguard::translator::{Confidence, HttpConfig, HttpTranslator, ScriptedTranslator, Translator, TranslatorPool};
use policyguard::verifier::VerifierConfig;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub solver: SolverSection,
    pub translator: TranslatorSection,
    pub verifier: VerifierSection,
    pub build: BuildSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub binary: Option<String>,
    pub args: Option<Vec<String>>,
    pub timeout_ms: Option<u64>,
    pub logic: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslatorSection {
    /// `scripted:<dir>` or `http`.
    pub backend: Option<String>,
    /// One entry per redundant backend.
    pub http: Vec<HttpConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierSection {
    pub threshold: Option<String>,
    pub max_input_chars: Option<usize>,
    pub max_term_nodes: Option<usize>,
    pub enumerate: Option<usize>,
    pub repair_budget: Option<usize>,
    pub audit_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub target_span_tokens: Option<usize>,
    pub cluster_threshold: Option<f64>,
    pub fail_fast: Option<bool>,
}

pub const ENV_SOLVER: &str = "POLICYGUARD_SOLVER";
pub const ENV_TRANSLATOR: &str = "POLICYGUARD_TRANSLATOR";
pub const ENV_THRESHOLD: &str = "POLICYGUARD_THRESHOLD";

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Config::default(),
        };
        if let Ok(v) = std::env::var(ENV_SOLVER) {
            config.solver.binary = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_TRANSLATOR) {
            config.translator.backend = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_THRESHOLD) {
            config.verifier.threshold = Some(v);
        }
        Ok(config)
    }

    pub fn solver(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        if let Some(b) = &self.solver.binary {
            c.binary = b.clone();
        }
        if let Some(a) = &self.solver.args {
            c.args = a.clone();
        }
        if let Some(ms) = self.solver.timeout_ms {
            c.timeout = Duration::from_millis(ms);
        }
        if let Some(l) = &self.solver.logic {
            c.logic = l.clone();
        }
        c
    }

    pub fn verifier(&self) -> Result<VerifierConfig> {
        let mut c = VerifierConfig::default();
        let v = &self.verifier;
        if let Some(t) = &v.threshold {
            c.threshold = parse_threshold(t)?;
        }
        if let Some(n) = v.max_input_chars {
            c.max_input_chars = n;
        }
        if let Some(n) = v.max_term_nodes {
            c.max_term_nodes = n;
        }
        if let Some(n) = v.enumerate {
            c.enumerate = n.max(1);
        }
        if let Some(n) = v.repair_budget {
            c.repair_budget = n;
        }
        c.audit_dir = v.audit_dir.clone();
        Ok(c)
    }

    pub fn build(&self) -> BuildConfig {
        let mut c = BuildConfig::default();
        if let Some(n) = self.build.target_span_tokens {
            c.target_span_tokens = n;
        }
        if let Some(t) = self.build.cluster_threshold {
            c.cluster_threshold = t;
        }
        if let Some(f) = self.build.fail_fast {
            c.fail_fast = f;
        }
        if let Some(n) = self.verifier.repair_budget {
            c.repair_budget = n;
        }
        c
    }

    /// The translator pool named by `spec`, or by the configuration.
    pub fn pool(&self, spec: Option<&str>) -> Result<TranslatorPool> {
        let spec = spec.or(self.translator.backend.as_deref()).context(
            "no translator configured; pass --translator scripted:<dir> or --translator http, or set [translator] backend",
        )?;
        let backends: Vec<Arc<dyn Translator>> = if let Some(dir) = spec.strip_prefix("scripted:") {
            ScriptedTranslator::load_dir(Path::new(dir))
                .map_err(anyhow::Error::msg)?
                .into_iter()
                .map(|b| Arc::new(b) as Arc<dyn Translator>)
                .collect()
        } else if spec == "http" {
            let configs = if self.translator.http.is_empty() {
                vec![HttpConfig::default()]
            } else {
                self.translator.http.clone()
            };
            configs
                .into_iter()
                .map(|c| Ok(Arc::new(HttpTranslator::new(c)?) as Arc<dyn Translator>))
                .collect::<Result<_>>()?
        } else {
            bail!("unknown translator `{spec}`; expected scripted:<dir> or http");
        };
        Ok(TranslatorPool::new(backends))
    }
}

pub fn parse_threshold(s: &str) -> Result<Confidence> {
    s.parse::<Confidence>().map_err(|e| anyhow::anyhow!("threshold `{s}`: {e}"))
}
