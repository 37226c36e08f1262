//! Dataset evaluation and the accuracy table (datasets by backends).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use lpchat_core::ir::EquivalenceMode;
use lpchat_gateway::{Gateway, PromptTemplate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::{EvalSample, Language};
use super::metric::{exact_match, Mismatch};
use crate::formulate::formulate_with_retry;
use crate::prompts::question;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub language: Language,
    pub correct: bool,
    /// Set when a formulation was produced but differs from the gold one.
    pub mismatch: Option<Mismatch>,
    /// Set when no formulation was produced: the last failure kind.
    pub reason: Option<String>,
    pub attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub backend: String,
    pub prompt: String,
    pub mode: EquivalenceMode,
    /// Ordered by sample id.
    pub verdicts: Vec<Verdict>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl EvalReport {
    pub fn incorrect(&self) -> usize {
        self.total - self.correct
    }

    /// Accuracy over the samples of one language, if any.
    pub fn accuracy_for(&self, language: Language) -> Option<f64> {
        let subset: Vec<_> = self.verdicts.iter().filter(|v| v.language == language).collect();
        (!subset.is_empty()).then(|| subset.iter().filter(|v| v.correct).count() as f64 / subset.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub mode: EquivalenceMode,
    pub max_retries: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: EquivalenceMode::Strict,
            max_retries: 2,
        }
    }
}

fn judge(sample: &EvalSample, gateway: &Gateway, template: &PromptTemplate, opts: &EvalOptions) -> Verdict {
    let mut v = Verdict {
        id: sample.id.clone(),
        language: sample.language,
        correct: false,
        mismatch: None,
        reason: None,
        attempts: 0,
    };
    match formulate_with_retry(&question(&sample.description, &[]), gateway, template, opts.max_retries) {
        Err(failure) => {
            v.attempts = failure.attempts.len();
            v.reason = Some(failure.last_kind().to_string());
        }
        Ok(f) => {
            v.attempts = f.attempts.len();
            match exact_match(&f.ir, &sample.gold, opts.mode) {
                Ok(m) => {
                    v.correct = m.matched;
                    v.mismatch = m.mismatch;
                }
                Err(_) => v.reason = Some("InvalidIR".to_string()),
            }
        }
    }
    v
}

/// Formulates every sample and scores it with [`exact_match`]. Failed
/// formulations count as incorrect with their failure kind as reason.
pub fn evaluate(
    dataset_name: &str,
    dataset: &[EvalSample],
    gateway: &Gateway,
    template: &PromptTemplate,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut verdicts: Vec<Verdict> = dataset.iter().map(|s| judge(s, gateway, template, opts)).collect();
    verdicts.sort_by(|a, b| a.id.cmp(&b.id));
    let correct = verdicts.iter().filter(|v| v.correct).count();
    let total = verdicts.len();
    Ok(EvalReport {
        dataset: dataset_name.to_string(),
        backend: gateway.backend_name().to_string(),
        prompt: template.name.clone(),
        mode: opts.mode,
        verdicts,
        correct,
        total,
        accuracy: correct as f64 / total as f64,
    })
}

/// Rows are datasets, columns are backends, cells are whole percentages.
pub fn render_table(reports: &[EvalReport]) -> String {
    let datasets: BTreeSet<&str> = reports.iter().map(|r| r.dataset.as_str()).collect();
    let mut backends: Vec<&str> = Vec::new();
    for r in reports {
        if !backends.contains(&r.backend.as_str()) {
            backends.push(&r.backend);
        }
    }
    let cells: BTreeMap<(&str, &str), String> = reports
        .iter()
        .map(|r| {
            (
                (r.dataset.as_str(), r.backend.as_str()),
                format!("{:.0}%", r.accuracy * 100.0),
            )
        })
        .collect();
    let first = datasets.iter().map(|d| d.len()).chain(["Dataset".len()]).max().unwrap_or(7);
    let widths: Vec<usize> = backends.iter().map(|b| b.len().max(4)).collect();
    let mut out = String::new();
    write!(out, "{:<first$}", "Dataset").unwrap();
    for (b, w) in backends.iter().zip(&widths) {
        write!(out, "  {b:>w$}").unwrap();
    }
    out.push('\n');
    for d in &datasets {
        write!(out, "{d:<first$}").unwrap();
        for (b, w) in backends.iter().zip(&widths) {
            let cell = cells.get(&(*d, *b)).map(String::as_str).unwrap_or("-");
            write!(out, "  {cell:>w$}").unwrap();
        }
        out.push('\n');
    }
    out
}
