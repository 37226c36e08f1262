//! Generates unlabeled candidate problems from labeled seeds for later
//! human labeling.

use std::io::Write;
use std::path::Path;

use lpchat_core::ir::{validate, ProblemIR};
use lpchat_gateway::prompts::case_text;
use lpchat_gateway::{extract_first_json_object, Gateway, GatewayError, PromptTemplate, RenderError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::dataset::EvalSample;
use crate::prompts::bootstrap_prompt;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub seed_id: String,
    pub prompt: String,
    pub description: String,
    /// The proposed formulation as the model wrote it.
    pub proposed: Option<Value>,
    pub valid: bool,
    pub issues: Vec<String>,
}

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("n must be at least 1")]
    ZeroCount,
    #[error(transparent)]
    Template(#[from] RenderError),
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error("cannot write queue: {0}")]
    Io(#[from] std::io::Error),
}

fn review(reply: &str) -> (String, Option<Value>, Vec<String>) {
    let Some(obj) = extract_first_json_object(reply) else {
        return (String::new(), None, vec!["reply has no JSON object".into()]);
    };
    let mut issues = Vec::new();
    let description = obj.get("description").and_then(Value::as_str).unwrap_or_default().to_string();
    if description.trim().is_empty() {
        issues.push("missing description".into());
    }
    let proposed = obj.get("formulation").cloned();
    match &proposed {
        None => issues.push("missing formulation".into()),
        Some(v) => match ProblemIR::from_json(v) {
            Err(e) => issues.push(format!("formulation does not match the schema: {e}")),
            Ok(ir) => issues.extend(validate(&ir).iter().map(|v| v.to_string())),
        },
    }
    (description, proposed, issues)
}

/// Asks for `n` new problems, cycling through the seeds. Candidates that
/// fail validation are kept and flagged.
pub fn bootstrap_generate(
    seeds: &[EvalSample],
    template: &PromptTemplate,
    n: usize,
    gateway: &Gateway,
) -> Result<Vec<Candidate>, BootstrapError> {
    if seeds.is_empty() {
        return Err(BootstrapError::NoSeeds);
    }
    if n == 0 {
        return Err(BootstrapError::ZeroCount);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let seed = &seeds[i % seeds.len()];
        let seed_text = case_text(&seed.description, &seed.gold.to_json().to_string());
        let reply = gateway.ask(None, &bootstrap_prompt(template, &seed_text, i + 1)?)?;
        let (description, proposed, issues) = review(&reply);
        out.push(Candidate {
            id: format!("cand-{:04}", i + 1),
            seed_id: seed.id.clone(),
            prompt: template.name.clone(),
            description,
            proposed,
            valid: issues.is_empty(),
            issues,
        });
    }
    Ok(out)
}

/// Appends candidates to a JSON Lines label queue.
pub fn write_queue(path: impl AsRef<Path>, candidates: &[Candidate]) -> Result<(), BootstrapError> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for c in candidates {
        writeln!(f, "{}", serde_json::to_string(c).expect("candidates serialize"))?;
    }
    f.flush()?;
    Ok(())
}
