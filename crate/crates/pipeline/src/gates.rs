//! Relevance and completeness checks run before any formulation attempt.

use std::collections::BTreeSet;
use std::fmt;

use lpchat_gateway::{extract_first_json_object, Gateway, GatewayError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::prompts::{completeness_prompt, relevance_prompt};
use crate::PipelineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Objective,
    Variables,
    Constraints,
    Parameters,
}

impl Element {
    pub const ALL: [Element; 4] = [
        Element::Objective,
        Element::Variables,
        Element::Constraints,
        Element::Parameters,
    ];

    fn parse(s: &str) -> Option<Element> {
        match s.trim().to_lowercase().as_str() {
            "objective" | "objectives" => Some(Element::Objective),
            "variables" | "variable" | "decision variables" => Some(Element::Variables),
            "constraints" | "constraint" | "limits" => Some(Element::Constraints),
            "parameters" | "parameter" | "data" | "numbers" => Some(Element::Parameters),
            _ => None,
        }
    }

    fn ask(self) -> &'static str {
        match self {
            Element::Objective => "what you want to maximize or minimize",
            Element::Variables => "which quantities you need to decide",
            Element::Constraints => "the limits or requirements that apply",
            Element::Parameters => "the numbers involved (costs, capacities, amounts)",
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Element::Objective => "objective",
            Element::Variables => "variables",
            Element::Constraints => "constraints",
            Element::Parameters => "parameters",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgedBy {
    Backend,
    Keywords,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub complete: bool,
    pub missing: BTreeSet<Element>,
    /// Nonempty exactly when the report is incomplete.
    pub follow_up_question: String,
    pub judged_by: JudgedBy,
}

impl CompletenessReport {
    /// Builds a report from the missing set alone, keeping
    /// `complete <=> missing is empty` and writing one question that asks
    /// for everything missing.
    pub fn from_missing(missing: BTreeSet<Element>, question: Option<String>, judged_by: JudgedBy) -> Self {
        let complete = missing.is_empty();
        let follow_up_question = if complete {
            String::new()
        } else {
            question
                .filter(|q| !q.trim().is_empty())
                .unwrap_or_else(|| default_question(&missing))
        };
        CompletenessReport {
            complete,
            missing,
            follow_up_question,
            judged_by,
        }
    }
}

fn default_question(missing: &BTreeSet<Element>) -> String {
    let parts: Vec<&str> = missing.iter().map(|e| e.ask()).collect();
    let list = match parts.as_slice() {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    };
    format!("To build the model I still need {list}. Could you tell me?")
}

fn require_text(description: &str) -> Result<(), PipelineError> {
    if description.trim().is_empty() {
        Err(PipelineError::EmptyInput)
    } else {
        Ok(())
    }
}

/// Asks the backend whether `text` is an optimization request. Replies
/// without a readable verdict count as relevant, so users are never
/// blocked by a confused classifier.
pub fn check_relevance(text: &str, gateway: &Gateway) -> Result<bool, PipelineError> {
    require_text(text)?;
    let reply = gateway.ask(None, &relevance_prompt(text)).map_err(PipelineError::Backend)?;
    if let Some(obj) = extract_first_json_object(&reply) {
        if let Some(b) = obj.get("relevant").and_then(Value::as_bool) {
            return Ok(b);
        }
    }
    let lower = reply.trim().to_lowercase();
    Ok(!(lower.starts_with("no") || lower.contains("\"relevant\": false")))
}

/// Backend judgement of whether the accumulated description is complete;
/// falls back to [`keyword_completeness`] when the backend is unreachable.
pub fn check_completeness(description: &str, gateway: &Gateway) -> Result<CompletenessReport, PipelineError> {
    require_text(description)?;
    let reply = match gateway.ask(None, &completeness_prompt(description)) {
        Ok(r) => r,
        Err(GatewayError::BackendUnavailable(_) | GatewayError::Timeout(_)) => {
            return Ok(keyword_completeness(description))
        }
        Err(e) => return Err(PipelineError::Backend(e)),
    };
    let Some(obj) = extract_first_json_object(&reply) else {
        return Ok(keyword_completeness(description));
    };
    let mut missing: BTreeSet<Element> = obj
        .get("missing")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).filter_map(Element::parse).collect())
        .unwrap_or_default();
    let claimed = obj.get("complete").and_then(Value::as_bool);
    if claimed == Some(false) && missing.is_empty() {
        missing = keyword_completeness(description).missing;
        if missing.is_empty() {
            missing.insert(Element::Constraints);
        }
    }
    if claimed == Some(true) {
        missing.clear();
    }
    let question = obj.get("question").and_then(Value::as_str).map(str::to_string);
    Ok(CompletenessReport::from_missing(missing, question, JudgedBy::Backend))
}

const OBJECTIVE_WORDS: &[&str] = &[
    "maximize", "maximise", "minimize", "minimise", "maximum", "minimum", "profit", "cost", "revenue",
    "最大", "最小", "利润", "成本", "收益",
];
const CONSTRAINT_WORDS: &[&str] = &[
    "at most", "at least", "no more than", "no less than", "not exceed", "up to", "limit", "capacity",
    "budget", "available", "require", "must", "more than", "less than", "<=", ">=", "至多", "至少",
    "不超过", "不少于", "不低于", "限制", "最多", "需要", "多于", "少于",
];
const VARIABLE_WORDS: &[&str] = &[
    "how many", "how much", "number of", "amount", "quantity", "decide", "produce", "make", "buy",
    "allocate", "choose", "select", "多少", "生产", "决定", "购买", "分配",
];

/// Deterministic stand-in for the backend's judgement.
pub fn keyword_completeness(description: &str) -> CompletenessReport {
    let lower = description.to_lowercase();
    let has = |words: &[&str]| words.iter().any(|w| lower.contains(w));
    let mut missing = BTreeSet::new();
    if !has(OBJECTIVE_WORDS) {
        missing.insert(Element::Objective);
    }
    if !has(CONSTRAINT_WORDS) {
        missing.insert(Element::Constraints);
    }
    if !has(VARIABLE_WORDS) {
        missing.insert(Element::Variables);
    }
    if !lower.chars().any(|c| c.is_ascii_digit()) {
        missing.insert(Element::Parameters);
    }
    CompletenessReport::from_missing(missing, None, JudgedBy::Keywords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpchat_gateway::ScriptedBackend;
    use std::sync::Arc;

    fn gateway(pairs: &[(String, &str)]) -> Gateway {
        Gateway::new(Arc::new(ScriptedBackend::from_pairs(
            pairs.iter().map(|(p, r)| (p.clone(), r.to_string())),
        )))
    }

    #[test]
    fn relevance_verdicts() {
        let g = gateway(&[
            (relevance_prompt("What's the weather today?"), "{\"relevant\": false}"),
            (relevance_prompt("Plan production"), "Sure: {\"relevant\": true}"),
            (relevance_prompt("hmm"), "No."),
        ]);
        assert!(!check_relevance("What's the weather today?", &g).unwrap());
        assert!(check_relevance("Plan production", &g).unwrap());
        assert!(!check_relevance("hmm", &g).unwrap());
        assert!(matches!(check_relevance("  ", &g), Err(PipelineError::EmptyInput)));
        assert_eq!(g.transcript().len(), 3);
    }

    #[test]
    fn incomplete_report_asks_one_question() {
        let d = "I run a coffee shop and want to decide how much coffee to make";
        let g = gateway(&[(
            completeness_prompt(d),
            "{\"complete\": false, \"missing\": [\"objective\", \"constraints\"], \"question\": \"\"}",
        )]);
        let r = check_completeness(d, &g).unwrap();
        assert!(!r.complete);
        assert_eq!(r.missing, BTreeSet::from([Element::Objective, Element::Constraints]));
        assert_eq!(
            r.follow_up_question,
            "To build the model I still need what you want to maximize or minimize and the limits or requirements that apply. Could you tell me?"
        );
    }

    #[test]
    fn complete_report_has_no_question() {
        let d = "full";
        let g = gateway(&[(completeness_prompt(d), "{\"complete\": true, \"missing\": [], \"question\": \"\"}")]);
        let r = check_completeness(d, &g).unwrap();
        assert!(r.complete && r.missing.is_empty() && r.follow_up_question.is_empty());
    }

    #[test]
    fn inconsistent_backend_reports_are_repaired() {
        let d = "Maximize profit making chairs, at most 10 hours";
        let g = gateway(&[(completeness_prompt(d), "{\"complete\": false}")]);
        let r = check_completeness(d, &g).unwrap();
        assert!(!r.complete);
        assert!(!r.missing.is_empty());
        assert!(!r.follow_up_question.is_empty());
    }

    #[test]
    fn keyword_fallback_when_backend_is_down() {
        struct Down;
        impl lpchat_gateway::ChatBackend for Down {
            fn name(&self) -> &str {
                "down"
            }
            fn complete(&self, _: &[lpchat_gateway::ChatMessage]) -> Result<String, GatewayError> {
                Err(GatewayError::BackendUnavailable("offline".into()))
            }
        }
        let g = Gateway::new(Arc::new(Down));
        let r = check_completeness("I run a coffee shop and want to decide how much coffee to make", &g).unwrap();
        assert_eq!(r.judged_by, JudgedBy::Keywords);
        assert!(r.missing.contains(&Element::Objective));
        assert!(r.missing.contains(&Element::Constraints));
        let full = check_completeness(
            "Decide how many cups to make to maximize profit 3 per cup with at most 100 cups",
            &g,
        )
        .unwrap();
        assert!(full.complete);
        assert!(matches!(check_relevance("x", &g), Err(PipelineError::Backend(_))));
    }
}
