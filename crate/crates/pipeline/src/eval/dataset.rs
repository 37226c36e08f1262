//! JSON Lines datasets: one [`EvalSample`] per line.

use std::path::Path;

use lpchat_core::ir::{validate, ProblemIR};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub id: String,
    pub description: String,
    #[serde(with = "crate::serde_ir")]
    pub gold: ProblemIR,
    pub language: Language,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {detail}")]
    Line { line: usize, detail: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
}

/// Parses and checks a dataset: every gold formulation must validate and
/// ids must be unique. Blank lines are skipped.
pub fn parse_dataset(text: &str) -> Result<Vec<EvalSample>, DatasetError> {
    let mut out: Vec<EvalSample> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sample: EvalSample = serde_json::from_str(line).map_err(|e| DatasetError::Line {
            line: i + 1,
            detail: e.to_string(),
        })?;
        let violations = validate(&sample.gold);
        if !violations.is_empty() {
            return Err(DatasetError::Line {
                line: i + 1,
                detail: format!("gold formulation of {} is invalid: {}", sample.id, violations[0]),
            });
        }
        if !seen.insert(sample.id.clone()) {
            return Err(DatasetError::DuplicateId(sample.id));
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<EvalSample>, DatasetError> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn to_jsonl(samples: &[EvalSample]) -> String {
    samples
        .iter()
        .map(|s| serde_json::to_string(s).expect("samples serialize") + "\n")
        .collect()
}
