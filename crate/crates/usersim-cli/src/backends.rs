//! Construct chat backends from per-role configuration.

use std::time::Duration;

use usersim_core::gateway::{
    ChatBackend, ChatRequest, ChatResponse, GatewayError, HttpBackend, ScriptedBackend,
};

use crate::config::{BackendConfig, BackendKind, ConfigError};

/// Decorator pinning the request temperature to a configured value,
/// regardless of what the pipeline stage asked for.
struct TemperatureOverride {
    inner: Box<dyn ChatBackend>,
    temperature: f64,
}

impl ChatBackend for TemperatureOverride {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut req = req.clone();
        req.temperature = self.temperature;
        self.inner.complete(&req)
    }

    fn label(&self) -> &str {
        self.inner.label()
    }
}

/// Build the backend for one role. Script files are loaded eagerly so a
/// bad path fails before any session starts.
pub fn build_backend(
    role: &'static str,
    cfg: &BackendConfig,
) -> Result<Box<dyn ChatBackend>, ConfigError> {
    let backend: Box<dyn ChatBackend> = match cfg.kind {
        BackendKind::Scripted => {
            let path = cfg
                .script_path
                .as_ref()
                .expect("validated: scripted backend has script_path");
            let label = cfg.model_label.clone().unwrap_or_else(|| role.to_string());
            let scripted = ScriptedBackend::from_script_file(label, path).map_err(|e| {
                ConfigError::InvalidBackend {
                    role,
                    detail: format!("script {}: {e}", path.display()),
                }
            })?;
            Box::new(scripted)
        }
        BackendKind::Http => {
            let base_url = cfg
                .base_url
                .clone()
                .expect("validated: http backend has base_url");
            let model = cfg
                .model_label
                .clone()
                .expect("validated: http backend has model_label");
            let mut http = match &cfg.api_key_env {
                Some(env) => HttpBackend::with_key_env(base_url, model, env),
                None => HttpBackend::new(base_url, model),
            };
            if let Some(secs) = cfg.timeout_secs {
                http = http.timeout(Duration::from_secs(secs));
            }
            Box::new(http)
        }
    };
    Ok(match cfg.temperature {
        Some(temperature) => Box::new(TemperatureOverride {
            inner: backend,
            temperature,
        }),
        None => backend,
    })
}
