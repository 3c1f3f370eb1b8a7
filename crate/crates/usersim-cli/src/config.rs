//! Campaign configuration.
//!
//! One JSON file drives a whole campaign. Secrets never live in the
//! file: `${VAR}` references are substituted from the environment at
//! load time and a missing variable is a hard error. Relative paths are
//! resolved against the config file's directory so a campaign directory
//! can be moved or checked in wholesale.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use usersim_core::dialogue::SessionConfig;
use usersim_core::generator::GenerationConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} is not valid JSON: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("config references environment variable {0}, which is not set")]
    MissingEnvVar(String),
    #[error("unterminated ${{...}} reference in config")]
    UnterminatedVar,
    #[error("backend '{role}': {detail}")]
    InvalidBackend { role: &'static str, detail: String },
    #[error("no '{0}' backend configured but this command requires one")]
    MissingBackend(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// Replace every `${NAME}` with the value of the environment variable
/// `NAME`. There is no escape syntax; a `$` not followed by `{` passes
/// through untouched.
pub fn substitute_env(raw: &str) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or(ConfigError::UnterminatedVar)?;
        let name = &after[..end];
        let value =
            std::env::var(name).map_err(|_| ConfigError::MissingEnvVar(name.to_string()))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Scripted,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Http => "http",
            BackendKind::Scripted => "scripted",
        })
    }
}

/// Settings for one backend role (user, judge, responder or generator).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// HTTP only: OpenAI-compatible endpoint root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    /// Model name sent to the endpoint and recorded on artifacts. For
    /// scripted backends it defaults to the role name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_label: Option<String>,
    /// Overrides the pipeline's per-call temperature when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    /// Scripted only: JSONL reply script.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<PathBuf>,
    /// HTTP only: environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// HTTP only: request timeout in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
}

impl BackendConfig {
    pub fn is_scripted(&self) -> bool {
        self.kind == BackendKind::Scripted
    }

    fn validate(&self, role: &'static str) -> Result<(), ConfigError> {
        let invalid = |detail: String| ConfigError::InvalidBackend { role, detail };
        match self.kind {
            BackendKind::Scripted => {
                if self.script_path.is_none() {
                    return Err(invalid("scripted backend requires script_path".into()));
                }
            }
            BackendKind::Http => {
                if self.base_url.is_none() || self.model_label.is_none() {
                    return Err(invalid(
                        "http backend requires base_url and model_label".into(),
                    ));
                }
            }
        }
        if let Some(t) = self.temperature {
            if !(0.0..=2.0).contains(&t) {
                return Err(invalid(format!("temperature {t} outside 0.0..=2.0")));
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &self.script_path {
            self.script_path = Some(resolve(base, p));
        }
    }
}

/// Per-role backends. Each command validates that the roles it needs
/// are present; `responder` is always optional (without it the bot
/// answers from templates alone).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backends {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responder: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<BackendConfig>,
}

impl Backends {
    fn roles(&self) -> [(&'static str, Option<&BackendConfig>); 4] {
        [
            ("user", self.user.as_ref()),
            ("judge", self.judge.as_ref()),
            ("responder", self.responder.as_ref()),
            ("generator", self.generator.as_ref()),
        ]
    }
}

/// Generation stage settings; every field is optional in the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationSection {
    pub batch_size: u32,
    pub max_parse_retries: u32,
    pub temperature: f64,
    /// Replaces the built-in generation system prompt when set.
    pub system_prompt: Option<String>,
}

impl Default for GenerationSection {
    fn default() -> Self {
        let d = GenerationConfig::default();
        Self {
            batch_size: d.batch_size,
            max_parse_retries: d.max_parse_retries,
            temperature: d.temperature,
            system_prompt: None,
        }
    }
}

impl GenerationSection {
    pub fn to_core(&self) -> GenerationConfig {
        let mut cfg = GenerationConfig {
            batch_size: self.batch_size,
            max_parse_retries: self.max_parse_retries,
            temperature: self.temperature,
            ..GenerationConfig::default()
        };
        if let Some(prompt) = &self.system_prompt {
            cfg.system_prompt = prompt.clone();
        }
        cfg
    }
}

/// Session stage settings; every field is optional in the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionSection {
    pub max_turns: u32,
    pub judge_every_user_turn: bool,
    pub error_cap: u32,
}

impl Default for SessionSection {
    fn default() -> Self {
        let d = SessionConfig::default();
        Self {
            max_turns: d.max_turns,
            judge_every_user_turn: d.judge_every_user_turn,
            error_cap: d.error_cap,
        }
    }
}

impl SessionSection {
    pub fn to_core(&self) -> SessionConfig {
        SessionConfig {
            max_turns: self.max_turns,
            judge_every_user_turn: self.judge_every_user_turn,
            error_cap: self.error_cap,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_parallel_sessions() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub session: SessionSection,
    pub backends: Backends,
    /// Program catalog (CSV or JSONL); the bundled catalog when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog_path: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Sessions simulated concurrently. Forced to 1 when the simulation
    /// backends are scripted, because scripts replay by call order.
    #[serde(default = "default_parallel_sessions")]
    pub parallel_sessions: u32,
    /// Reserved for stochastic extensions; recorded so reruns can state
    /// "equal config and seed". The pipeline itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.parallel_sessions == 0 {
            return Err(ConfigError::Invalid(
                "parallel_sessions must be at least 1".to_string(),
            ));
        }
        if self.generation.batch_size == 0 {
            return Err(ConfigError::Invalid(
                "generation.batch_size must be at least 1".to_string(),
            ));
        }
        if self.session.max_turns == 0 {
            return Err(ConfigError::Invalid(
                "session.max_turns must be at least 1".to_string(),
            ));
        }
        for (role, backend) in self.backends.roles() {
            if let Some(backend) = backend {
                backend.validate(role)?;
            }
        }
        Ok(())
    }

    /// The backend for `role`, or an error naming what is missing.
    pub fn require_backend(&self, role: &'static str) -> Result<&BackendConfig, ConfigError> {
        let slot = match role {
            "user" => &self.backends.user,
            "judge" => &self.backends.judge,
            "responder" => &self.backends.responder,
            "generator" => &self.backends.generator,
            other => panic!("unknown backend role {other}"),
        };
        slot.as_ref().ok_or(ConfigError::MissingBackend(role))
    }

    /// True when every backend the simulation stage would call is
    /// scripted — the condition for a deterministic replay clock.
    pub fn simulation_all_scripted(&self) -> bool {
        let scripted = |b: &Option<BackendConfig>| b.as_ref().is_some_and(|b| b.is_scripted());
        scripted(&self.backends.user)
            && scripted(&self.backends.judge)
            && self
                .backends
                .responder
                .as_ref()
                .is_none_or(|b| b.is_scripted())
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &self.catalog_path {
            self.catalog_path = Some(resolve(base, p));
        }
        self.output_dir = resolve(base, &self.output_dir);
        for backend in [
            &mut self.backends.user,
            &mut self.backends.judge,
            &mut self.backends.responder,
            &mut self.backends.generator,
        ]
        .into_iter()
        .flatten()
        {
            backend.resolve_paths(base);
        }
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Read, substitute, parse, resolve and validate a campaign config.
pub fn load_config(path: &Path) -> Result<CampaignConfig, ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let substituted = substitute_env(&raw)?;
    let mut cfg: CampaignConfig =
        serde_json::from_str(&substituted).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    cfg.resolve_paths(base.unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}
