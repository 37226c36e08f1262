use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::{BackendConfig, ChatBackend, ChatMessage, GatewayError, Role};

/// Collapses whitespace runs to single spaces, trims, and lowercases.
pub fn normalize_prompt(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Hex SHA-256 of the normalized prompt.
pub fn fixture_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(normalize_prompt(prompt).as_bytes()))
}

/// Deterministic backend answering from a fixture table keyed by
/// [`fixture_key`] of the last user message.
#[derive(Clone, Debug, Default)]
pub struct ScriptedBackend {
    fixtures: BTreeMap<String, String>,
    fallback: Option<String>,
}

impl ScriptedBackend {
    pub fn new(fixtures: BTreeMap<String, String>) -> Self {
        ScriptedBackend {
            fixtures,
            fallback: None,
        }
    }

    /// Builds the table from raw prompts rather than keys.
    pub fn from_pairs<P, R>(pairs: impl IntoIterator<Item = (P, R)>) -> Self
    where
        P: AsRef<str>,
        R: Into<String>,
    {
        let mut backend = ScriptedBackend::default();
        for (prompt, reply) in pairs {
            backend.insert(prompt.as_ref(), reply);
        }
        backend
    }

    /// Answers every prompt with `reply`.
    pub fn constant(reply: impl Into<String>) -> Self {
        ScriptedBackend {
            fixtures: BTreeMap::new(),
            fallback: Some(reply.into()),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let fixtures = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Ok(ScriptedBackend::new(fixtures))
    }

    pub fn from_config(cfg: &BackendConfig) -> Result<Self, GatewayError> {
        let path = cfg
            .fixtures
            .as_ref()
            .ok_or_else(|| GatewayError::Config("scripted backend needs `fixtures`".into()))?;
        ScriptedBackend::load(path)
    }

    pub fn insert(&mut self, prompt: &str, reply: impl Into<String>) {
        self.fixtures.insert(fixture_key(prompt), reply.into());
    }

    pub fn extend(&mut self, other: ScriptedBackend) {
        self.fixtures.extend(other.fixtures);
    }

    pub fn fixtures(&self) -> &BTreeMap<String, String> {
        &self.fixtures
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError> {
        let last = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .ok_or_else(|| GatewayError::InvalidRequest("no user message".into()))?;
        let key = fixture_key(&last.content);
        self.fixtures
            .get(&key)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or(GatewayError::FixtureMiss { key })
    }
}
