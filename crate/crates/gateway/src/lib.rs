//! Chat-completion gateway.
//!
//! A [`Gateway`] wraps one [`ChatBackend`] and a [`Transcript`]. Every prompt
//! is recorded in the transcript before `complete` returns, whatever the
//! outcome, so tests can inspect exactly what left the process.

mod config;
mod extract;
mod http;
pub mod prompts;
mod scripted;
mod transcript;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BackendConfig, BackendKind};
pub use extract::extract_first_json_object;
pub use http::HttpBackend;
pub use prompts::{render, PromptTemplate, RenderError};
pub use scripted::{fixture_key, normalize_prompt, ScriptedBackend};
pub use transcript::{Transcript, TranscriptEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend timed out after {0} attempt(s)")]
    Timeout(u32),
    #[error("no fixture for prompt (key {key})")]
    FixtureMiss { key: String },
    #[error("backend returned an empty reply")]
    EmptyReply,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

/// A chat-completion provider. Implementations must be safe to call from
/// several threads at once.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Returns the raw assistant text.
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError>;
}

#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    transcript: Transcript,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.name())
            .field("transcript_len", &self.transcript.len())
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Gateway {
            backend,
            transcript: Transcript::in_memory(),
        }
    }

    pub fn from_config(cfg: &BackendConfig) -> Result<Self, GatewayError> {
        let backend: Arc<dyn ChatBackend> = match cfg.kind {
            BackendKind::Scripted => Arc::new(ScriptedBackend::from_config(cfg)?),
            BackendKind::Http => Arc::new(HttpBackend::from_config(cfg)?),
        };
        Ok(Gateway::new(backend))
    }

    /// Same backend, different transcript. Used to give each session its own log.
    pub fn with_transcript(&self, transcript: Transcript) -> Self {
        Gateway {
            backend: Arc::clone(&self.backend),
            transcript,
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn complete(&self, messages: &[ChatMessage]) -> Result<ChatMessage, GatewayError> {
        match messages.last() {
            None => return Err(GatewayError::InvalidRequest("no messages".into())),
            Some(m) if m.role != Role::User => {
                return Err(GatewayError::InvalidRequest(
                    "last message must come from the user".into(),
                ))
            }
            _ => {}
        }
        if let Some(m) = messages
            .iter()
            .find(|m| m.role != Role::System && m.content.trim().is_empty())
        {
            return Err(GatewayError::InvalidRequest(format!(
                "empty {:?} message",
                m.role
            )));
        }
        let result = self.backend.complete(messages).and_then(|text| {
            if text.trim().is_empty() {
                Err(GatewayError::EmptyReply)
            } else {
                Ok(text)
            }
        });
        self.transcript.record(self.backend.name(), messages, &result);
        result.map(ChatMessage::assistant)
    }

    /// Convenience for single-prompt calls with an optional system message.
    pub fn ask(&self, system: Option<&str>, prompt: &str) -> Result<String, GatewayError> {
        let mut messages = Vec::with_capacity(2);
        if let Some(s) = system {
            messages.push(ChatMessage::system(s));
        }
        messages.push(ChatMessage::user(prompt));
        self.complete(&messages).map(|m| m.content)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preconditions_are_checked_and_still_logged_nothing() {
        let g = Gateway::new(Arc::new(ScriptedBackend::from_pairs([("hi", "hello")])));
        assert!(matches!(g.complete(&[]), Err(GatewayError::InvalidRequest(_))));
        assert!(matches!(
            g.complete(&[ChatMessage::assistant("x")]),
            Err(GatewayError::InvalidRequest(_))
        ));
        assert!(matches!(
            g.complete(&[ChatMessage::user("  ")]),
            Err(GatewayError::InvalidRequest(_))
        ));
        assert_eq!(g.transcript().len(), 0);
    }

    #[test]
    fn prompts_reach_the_transcript_even_on_failure() {
        let g = Gateway::new(Arc::new(ScriptedBackend::from_pairs([("hi", "hello")])));
        assert_eq!(g.ask(None, "Hi").unwrap(), "hello");
        assert!(matches!(g.ask(None, "unknown"), Err(GatewayError::FixtureMiss { .. })));
        let entries = g.transcript().entries();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].messages[0].content, "unknown");
        assert!(entries[1].error.is_some());
    }

    #[test]
    fn empty_replies_are_errors() {
        let g = Gateway::new(Arc::new(ScriptedBackend::constant("   ")));
        assert_eq!(g.ask(None, "anything"), Err(GatewayError::EmptyReply));
    }

    #[test]
    fn sessions_can_share_a_backend_with_separate_logs() {
        let g = Gateway::new(Arc::new(ScriptedBackend::constant("ok")));
        let a = g.with_transcript(Transcript::in_memory());
        a.ask(None, "one").unwrap();
        assert_eq!(a.transcript().len(), 1);
        assert_eq!(g.transcript().len(), 0);
    }
}
