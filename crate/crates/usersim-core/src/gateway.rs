//! Chat-completion access: an OpenAI-compatible HTTP backend and a
//! deterministic scripted backend for tests and replays.
//!
//! Every LLM call in the pipeline (persona generation, user utterances,
//! button selection, goal judging, response generation) goes through
//! [`ChatBackend::complete`].

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ROLE_SYSTEM: &str = "system";
pub const ROLE_USER: &str = "user";
pub const ROLE_ASSISTANT: &str = "assistant";

/// Temperature used where output variance is wanted (persona and
/// user-utterance generation).
pub const TEMPERATURE_CREATIVE: f64 = 0.8;
/// Temperature used where stability is wanted (goal judging).
pub const TEMPERATURE_JUDGE: f64 = 0.0;

pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ROLE_SYSTEM.into(),
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ROLE_USER.into(),
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ROLE_ASSISTANT.into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Advisory; HTTP backends fall back to their configured model when
    /// this is empty.
    #[serde(default)]
    pub model_label: String,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>, temperature: f64) -> Self {
        Self {
            messages,
            temperature,
            max_tokens: DEFAULT_MAX_TOKENS,
            model_label: String::new(),
        }
    }

    /// All message contents joined, oldest first. Scripted expectations
    /// match against this rendering.
    pub fn rendered(&self) -> String {
        self.messages
            .iter()
            .map(|m| format!("[{}] {}", m.role, m.content))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone)]
pub struct ChatResponse {
    pub content: String,
    pub usage: Option<TokenUsage>,
    pub latency: Duration,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol failure (status {status:?}): {detail}")]
    Protocol { status: Option<u16>, detail: String },
    #[error("scripted backend has no reply left (call {call})")]
    ScriptExhausted { call: usize },
    #[error("scripted reply {call} expected prompt containing `{expected}`")]
    ScriptMismatch { call: usize, expected: String },
    #[error("gave up after {attempts} attempt(s): {source}")]
    Exhausted {
        attempts: u32,
        #[source]
        source: Box<GatewayError>,
    },
}

impl GatewayError {
    /// Transport errors and throttling/server statuses are worth
    /// retrying; scripted errors and client errors are not.
    pub fn is_retryable_default(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Protocol { status, .. } => {
                matches!(status, Some(429) | Some(500..=599))
            }
            _ => false,
        }
    }

    /// Attempt count carried by [`with_retry`] failures.
    pub fn attempts(&self) -> Option<u32> {
        match self {
            GatewayError::Exhausted { attempts, .. } => Some(*attempts),
            _ => None,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError>;

    /// Model label recorded on generated artifacts.
    fn label(&self) -> &str {
        "unknown"
    }
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub retryable: fn(&GatewayError) -> bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base: Duration::from_millis(250),
            retryable: GatewayError::is_retryable_default,
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        Self {
            max_attempts: 1,
            backoff_base: Duration::ZERO,
            retryable: |_| false,
        }
    }
}

/// Run `complete` with exponential backoff. Only errors accepted by
/// `policy.retryable` are retried; at most `policy.max_attempts`
/// requests are issued. The returned error is always
/// [`GatewayError::Exhausted`] carrying the attempt count.
pub fn with_retry(
    backend: &dyn ChatBackend,
    req: &ChatRequest,
    policy: &RetryPolicy,
) -> Result<ChatResponse, GatewayError> {
    assert!(policy.max_attempts >= 1, "max_attempts must be >= 1");
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        match backend.complete(req) {
            Ok(resp) => return Ok(resp),
            Err(err) => {
                if attempt >= policy.max_attempts || !(policy.retryable)(&err) {
                    return Err(GatewayError::Exhausted {
                        attempts: attempt,
                        source: Box::new(err),
                    });
                }
                let backoff = policy.backoff_base * 2u32.saturating_pow(attempt - 1);
                if !backoff.is_zero() {
                    std::thread::sleep(backoff);
                }
            }
        }
    }
}

/// One scripted reply, optionally guarded by a substring the incoming
/// prompt must contain. A failed guard consumes the entry and errors,
/// which doubles as a fault-injection mechanism in replay campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_substring: Option<String>,
}

impl ScriptEntry {
    pub fn reply(text: impl Into<String>) -> Self {
        Self {
            reply: text.into(),
            expect_substring: None,
        }
    }

    pub fn expecting(text: impl Into<String>, expect: impl Into<String>) -> Self {
        Self {
            reply: text.into(),
            expect_substring: Some(expect.into()),
        }
    }
}

/// Deterministic backend replaying a fixed list of replies in call
/// order. Serializes internally so concurrent callers still consume the
/// script in order.
pub struct ScriptedBackend {
    label: String,
    state: Mutex<ScriptState>,
}

#[derive(Debug)]
struct ScriptState {
    entries: std::collections::VecDeque<ScriptEntry>,
    calls: usize,
}

impl ScriptedBackend {
    pub fn new(label: impl Into<String>, entries: Vec<ScriptEntry>) -> Self {
        Self {
            label: label.into(),
            state: Mutex::new(ScriptState {
                entries: entries.into(),
                calls: 0,
            }),
        }
    }

    pub fn from_replies<I, S>(label: impl Into<String>, replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            label,
            replies.into_iter().map(|r| ScriptEntry::reply(r)).collect(),
        )
    }

    /// Load a script file: one JSON entry per line, either a bare string
    /// or `{"reply": ..., "expect_substring": ...}`.
    pub fn from_script_file(
        label: impl Into<String>,
        path: &std::path::Path,
    ) -> Result<Self, crate::jsonl::JsonlError> {
        let values: Vec<serde_json::Value> = crate::jsonl::read_jsonl(path)?;
        let mut entries = Vec::with_capacity(values.len());
        for (idx, value) in values.into_iter().enumerate() {
            let entry = match value {
                serde_json::Value::String(s) => ScriptEntry::reply(s),
                other => {
                    serde_json::from_value(other).map_err(|e| crate::jsonl::JsonlError::Parse {
                        path: path.display().to_string(),
                        line: idx + 1,
                        source: e,
                    })?
                }
            };
            entries.push(entry);
        }
        Ok(Self::new(label, entries))
    }

    pub fn remaining(&self) -> usize {
        self.state.lock().unwrap().entries.len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut state = self.state.lock().unwrap();
        state.calls += 1;
        let call = state.calls;
        let entry = state
            .entries
            .pop_front()
            .ok_or(GatewayError::ScriptExhausted { call })?;
        if let Some(expected) = &entry.expect_substring {
            if !req.rendered().contains(expected.as_str()) {
                return Err(GatewayError::ScriptMismatch {
                    call,
                    expected: expected.clone(),
                });
            }
        }
        Ok(ChatResponse {
            content: entry.reply,
            usage: None,
            latency: Duration::ZERO,
        })
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// OpenAI-compatible chat-completions client. Credentials come from an
/// environment variable, never from config files.
pub struct HttpBackend {
    base_url: String,
    model: String,
    api_key: Option<String>,
    timeout: Duration,
    client: reqwest::blocking::Client,
}

pub const DEFAULT_API_KEY_ENV: &str = "USERSIM_API_KEY";

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self::with_key_env(base_url, model, DEFAULT_API_KEY_ENV)
    }

    /// `key_env` names the environment variable holding the bearer
    /// token. A missing variable is allowed (local stubs need no auth).
    pub fn with_key_env(
        base_url: impl Into<String>,
        model: impl Into<String>,
        key_env: &str,
    ) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key: std::env::var(key_env).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(120),
            client: reqwest::blocking::Client::new(),
        }
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let model = if req.model_label.is_empty() {
            self.model.as_str()
        } else {
            req.model_label.as_str()
        };
        let body = WireRequest {
            model,
            messages: &req.messages,
            temperature: req.temperature,
            max_tokens: req.max_tokens,
        };
        let url = format!("{}/chat/completions", self.base_url);
        let started = Instant::now();
        let mut builder = self.client.post(&url).timeout(self.timeout).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            let detail: String = text.chars().take(200).collect();
            return Err(GatewayError::Protocol {
                status: Some(status.as_u16()),
                detail,
            });
        }
        let wire: WireResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::Protocol {
                status: Some(status.as_u16()),
                detail: format!("unparseable body: {e}"),
            })?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or(GatewayError::Protocol {
                status: Some(status.as_u16()),
                detail: "response carries no choices".to_string(),
            })?;
        Ok(ChatResponse {
            content: choice.message.content,
            usage: wire.usage.map(|u| TokenUsage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
            latency: started.elapsed(),
        })
    }

    fn label(&self) -> &str {
        &self.model
    }
}
