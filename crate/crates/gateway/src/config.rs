use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
}

/// Backend selection. The API key is never part of the config: `api_key_env`
/// names the environment variable that holds it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL of an OpenAI-compatible API, e.g. `https://host/v1`.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// JSON map from fixture key to reply text.
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    /// First retry delay; doubles on every further attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    500
}

impl BackendConfig {
    pub fn scripted(fixtures: impl Into<PathBuf>) -> Self {
        BackendConfig {
            kind: BackendKind::Scripted,
            endpoint: None,
            model: None,
            api_key_env: None,
            fixtures: Some(fixtures.into()),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            temperature: 0.0,
            backoff_ms: default_backoff(),
        }
    }

    pub fn http(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::Http,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            api_key_env: None,
            fixtures: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            temperature: 0.0,
            backoff_ms: default_backoff(),
        }
    }
}
