//! Formulation: model reply -> validated `ProblemIR`, with a bounded
//! feedback loop on failure.

use lpchat_core::ir::{validate, ProblemIR};
use lpchat_gateway::prompts::PromptTemplate;
use lpchat_gateway::{extract_first_json_object, Gateway, GatewayError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::prompts::{formulation_prompt, retry_prompt};

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum FormulateError {
    #[error("model output has no usable JSON formulation: {0}")]
    MalformedModelOutput(String),
    #[error("formulation violates the schema rules: {}", .0.join("; "))]
    InvalidIR(Vec<String>),
    #[error("backend failure: {0}")]
    Backend(String),
}

impl FormulateError {
    pub fn kind(&self) -> &'static str {
        match self {
            FormulateError::MalformedModelOutput(_) => "MalformedModelOutput",
            FormulateError::InvalidIR(_) => "InvalidIR",
            FormulateError::Backend(_) => "Backend",
        }
    }
}

impl From<GatewayError> for FormulateError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::EmptyReply => FormulateError::MalformedModelOutput("empty reply".into()),
            other => FormulateError::Backend(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Formulate,
    Retry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub prompt: PromptKind,
    pub reply: Option<String>,
    pub error: Option<FormulateError>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("formulation failed after {} attempt(s): {}", .attempts.len(), self.last_error())]
pub struct PipelineFailure {
    pub attempts: Vec<AttemptRecord>,
}

impl PipelineFailure {
    pub fn last_error(&self) -> String {
        self.attempts
            .last()
            .and_then(|a| a.error.as_ref())
            .map(|e| e.to_string())
            .unwrap_or_default()
    }

    pub fn last_kind(&self) -> &'static str {
        self.attempts
            .last()
            .and_then(|a| a.error.as_ref())
            .map(FormulateError::kind)
            .unwrap_or("Unknown")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Formulated {
    pub ir: ProblemIR,
    pub attempts: Vec<AttemptRecord>,
}

/// Reads a formulation from free-form model output. Accepts the IR object
/// directly or wrapped as `{"formulation": {...}}`; unnamed variables are
/// auto-named by the schema decoder.
pub fn parse_formulation(reply: &str) -> Result<ProblemIR, FormulateError> {
    let obj = extract_first_json_object(reply)
        .ok_or_else(|| FormulateError::MalformedModelOutput("no JSON object found".into()))?;
    let value = match obj.get("formulation") {
        Some(inner @ Value::Object(_)) if !obj.contains_key("variables") => inner.clone(),
        _ => Value::Object(obj),
    };
    let ir = ProblemIR::from_json(&value)
        .map_err(|e| FormulateError::MalformedModelOutput(e.to_string()))?;
    let violations = validate(&ir);
    if violations.is_empty() {
        Ok(ir)
    } else {
        Err(FormulateError::InvalidIR(violations.iter().map(|v| v.to_string()).collect()))
    }
}

fn attempt(gateway: &Gateway, prompt: String, kind: PromptKind) -> (AttemptRecord, Option<ProblemIR>) {
    match gateway.ask(None, &prompt) {
        Err(e) => (
            AttemptRecord {
                prompt: kind,
                reply: None,
                error: Some(e.into()),
            },
            None,
        ),
        Ok(reply) => match parse_formulation(&reply) {
            Ok(ir) => (
                AttemptRecord {
                    prompt: kind,
                    reply: Some(reply),
                    error: None,
                },
                Some(ir),
            ),
            Err(e) => (
                AttemptRecord {
                    prompt: kind,
                    reply: Some(reply),
                    error: Some(e),
                },
                None,
            ),
        },
    }
}

/// One formulation attempt with no retry.
pub fn formulate(question: &str, gateway: &Gateway, template: &PromptTemplate) -> Result<Formulated, PipelineFailure> {
    formulate_with_retry(question, gateway, template, 0)
}

/// Re-prompts with the previous reply and its diagnostics, at most
/// `max_retries` times after the failed attempt in `trail`.
pub fn diagnose_and_retry(
    mut trail: Vec<AttemptRecord>,
    question: &str,
    gateway: &Gateway,
    max_retries: usize,
) -> Result<Formulated, PipelineFailure> {
    for _ in 0..max_retries {
        let last = trail.last().expect("retry needs a failed attempt");
        let previous = last.reply.as_deref().unwrap_or("(no reply)");
        let diagnostics = last.error.as_ref().map(|e| e.to_string()).unwrap_or_default();
        let (record, ir) = attempt(gateway, retry_prompt(previous, &diagnostics, question), PromptKind::Retry);
        trail.push(record);
        if let Some(ir) = ir {
            return Ok(Formulated { ir, attempts: trail });
        }
    }
    Err(PipelineFailure { attempts: trail })
}

/// Formulate, then diagnose and retry. The backend is called at most
/// `1 + max_retries` times.
pub fn formulate_with_retry(
    question: &str,
    gateway: &Gateway,
    template: &PromptTemplate,
    max_retries: usize,
) -> Result<Formulated, PipelineFailure> {
    let prompt = match formulation_prompt(template, question) {
        Ok(p) => p,
        Err(e) => {
            return Err(PipelineFailure {
                attempts: vec![AttemptRecord {
                    prompt: PromptKind::Formulate,
                    reply: None,
                    error: Some(FormulateError::Backend(format!("prompt template: {e}"))),
                }],
            })
        }
    };
    let (record, ir) = attempt(gateway, prompt, PromptKind::Formulate);
    if let Some(ir) = ir {
        return Ok(Formulated {
            ir,
            attempts: vec![record],
        });
    }
    diagnose_and_retry(vec![record], question, gateway, max_retries)
}
