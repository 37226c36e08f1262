use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use crate::{BackendConfig, ChatBackend, ChatMessage, GatewayError};

/// OpenAI-compatible `chat/completions` client with retry and exponential
/// backoff on connection errors, timeouts, 429 and 5xx.
#[derive(Debug)]
pub struct HttpBackend {
    client: Client,
    url: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    max_retries: u32,
    backoff: Duration,
}

enum Attempt {
    Retry(GatewayError),
    Fatal(GatewayError),
}

impl HttpBackend {
    pub fn from_config(cfg: &BackendConfig) -> Result<Self, GatewayError> {
        let endpoint = cfg
            .endpoint
            .as_deref()
            .ok_or_else(|| GatewayError::Config("http backend needs `endpoint`".into()))?;
        let model = cfg
            .model
            .clone()
            .ok_or_else(|| GatewayError::Config("http backend needs `model`".into()))?;
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        };
        let client = Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs.max(1)))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpBackend {
            client,
            url,
            model,
            api_key,
            temperature: cfg.temperature,
            max_retries: cfg.max_retries,
            backoff: Duration::from_millis(cfg.backoff_ms),
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(GatewayError::Timeout(0))
            } else {
                Attempt::Retry(GatewayError::BackendUnavailable(e.to_string()))
            }
        })?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(Attempt::Retry(GatewayError::BackendUnavailable(format!(
                "HTTP {status}"
            ))));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(Attempt::Fatal(GatewayError::BackendUnavailable(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            ))));
        }
        let value: Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(GatewayError::Timeout(0))
            } else {
                Attempt::Fatal(GatewayError::BackendUnavailable(format!("bad response body: {e}")))
            }
        })?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                Attempt::Fatal(GatewayError::BackendUnavailable(
                    "response has no choices[0].message.content".into(),
                ))
            })
    }
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.model
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        });
        let attempts = self.max_retries + 1;
        let mut last = GatewayError::BackendUnavailable("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => last = e,
            }
        }
        Err(match last {
            GatewayError::Timeout(_) => GatewayError::Timeout(attempts),
            other => other,
        })
    }
}
