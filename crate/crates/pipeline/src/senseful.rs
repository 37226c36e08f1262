//! Post-solve check that the answer meets what the user asked for.

use std::fmt;

use lpchat_core::ir::ProblemIR;
use lpchat_core::solver::{SolveResult, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::interpret::format_value;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirements {
    /// Every variable must take a whole-number value.
    pub integer: bool,
    pub nonnegative: bool,
    /// Variables that must appear in the model.
    pub required_variables: Vec<String>,
}

const INTEGER_WORDS: &[&str] = &[
    "integer", "whole number", "whole unit", "whole servings", "整数", "整",
];
const NONNEGATIVE_WORDS: &[&str] = &["non-negative", "nonnegative", "cannot be negative", "非负"];

impl Requirements {
    /// Requirements stated in plain words in the description.
    pub fn from_description(text: &str) -> Self {
        let lower = text.to_lowercase();
        let has = |words: &[&str]| words.iter().any(|w| lower.contains(w));
        Requirements {
            integer: has(INTEGER_WORDS),
            nonnegative: has(NONNEGATIVE_WORDS),
            required_variables: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.integer && !self.nonnegative && self.required_variables.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum SensefulViolation {
    NonIntegerValue { variable: String, value: f64 },
    NegativeValue { variable: String, value: f64 },
    MissingVariable { variable: String },
}

impl SensefulViolation {
    /// The question put back to the user.
    pub fn question(&self) -> String {
        match self {
            SensefulViolation::NonIntegerValue { variable, value } => format!(
                "The solution sets {variable} = {}, but you asked for whole numbers. Should {variable} be restricted to integers?",
                format_value(*value)
            ),
            SensefulViolation::NegativeValue { variable, value } => format!(
                "The solution sets {variable} = {}, but you said values cannot be negative. Should {variable} have a lower bound of 0?",
                format_value(*value)
            ),
            SensefulViolation::MissingVariable { variable } => {
                format!("The model has no variable {variable}. What should it represent?")
            }
        }
    }
}

impl fmt::Display for SensefulViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.question())
    }
}

/// Returns an empty list when the optimal solution meets `req`. Only
/// meaningful for optimal results; anything else yields no violations.
pub fn senseful_check(p: &ProblemIR, r: &SolveResult, req: &Requirements) -> Vec<SensefulViolation> {
    let mut out = Vec::new();
    for name in &req.required_variables {
        if p.variable(name).is_none() {
            out.push(SensefulViolation::MissingVariable { variable: name.clone() });
        }
    }
    let Some(assignment) = r.assignment.as_ref().filter(|_| r.status == SolveStatus::Optimal) else {
        return out;
    };
    for v in &p.variables {
        let Some(&value) = assignment.get(&v.name) else { continue };
        if req.integer && (value - value.round()).abs() > 1e-6 {
            out.push(SensefulViolation::NonIntegerValue {
                variable: v.name.clone(),
                value,
            });
        }
        if req.nonnegative && value < -1e-9 {
            out.push(SensefulViolation::NegativeValue {
                variable: v.name.clone(),
                value,
            });
        }
    }
    out
}
