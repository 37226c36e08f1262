//! Natural-language report of a solve result.

use std::fmt::Write;

use lpchat_core::ir::{ObjectiveSense, ProblemIR};
use lpchat_core::solver::{SolveResult, SolveStatus};
use lpchat_gateway::Gateway;
use serde::{Deserialize, Serialize};

use crate::prompts::interpretation_prompt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpretMode {
    #[default]
    Template,
    Model,
}

/// Integers print without a fractional part; other values with up to six
/// decimals.
pub fn format_value(v: f64) -> String {
    if v.is_finite() && (v - v.round()).abs() < 1e-9 && v.abs() < 1e15 {
        let r = v.round();
        return format!("{}", if r == 0.0 { 0.0 } else { r });
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn constraint_label(p: &ProblemIR, i: usize) -> String {
    p.constraints[i].name.clone().unwrap_or_else(|| format!("#{}", i + 1))
}

/// Deterministic summary: status, objective, each value with its bound
/// activity, and every strictness note.
pub fn template_summary(p: &ProblemIR, r: &SolveResult) -> String {
    let mut out = String::new();
    match r.status {
        SolveStatus::Optimal => {
            let direction = match p.objective.sense {
                ObjectiveSense::Maximize => "maximum",
                ObjectiveSense::Minimize => "minimum",
            };
            let value = r.objective_value.unwrap_or(f64::NAN);
            writeln!(out, "The solver found an optimal solution.").unwrap();
            writeln!(out, "The objective value {} is the {direction}.", format_value(value)).unwrap();
            let assignment = r.assignment.clone().unwrap_or_default();
            for v in &p.variables {
                let x = assignment.get(&v.name).copied().unwrap_or(f64::NAN);
                let tol = 1e-9 * (1.0 + x.abs());
                let (lo, hi) = (v.lower.to_f64(), v.upper.to_f64());
                let activity = if lo.is_finite() && hi.is_finite() && (hi - lo).abs() <= tol {
                    "fixed by its bounds"
                } else if lo.is_finite() && (x - lo).abs() <= tol {
                    "at its lower bound"
                } else if hi.is_finite() && (x - hi).abs() <= tol {
                    "at its upper bound"
                } else {
                    "between its bounds"
                };
                writeln!(out, "  {} = {} ({activity})", v.name, format_value(x)).unwrap();
            }
        }
        SolveStatus::Infeasible => {
            writeln!(out, "The problem is infeasible: no assignment satisfies all constraints at once.").unwrap();
            let names: Vec<String> = (0..p.constraints.len()).map(|i| constraint_label(p, i)).collect();
            if names.is_empty() {
                writeln!(out, "The variable bounds alone conflict.").unwrap();
            } else {
                writeln!(out, "Constraints to review: {}.", names.join(", ")).unwrap();
            }
        }
        SolveStatus::Unbounded => {
            writeln!(
                out,
                "The problem is unbounded: the objective can improve without limit. An upper bound or a constraint is probably missing."
            )
            .unwrap();
        }
        SolveStatus::IterationLimit => {
            writeln!(out, "The solver stopped at its iteration limit before proving optimality.").unwrap();
        }
    }
    for note in &r.relaxations {
        writeln!(out, "Note: {note}.").unwrap();
    }
    out
}

/// Replaces standalone numbers with `<v1>`, `<v2>`, ... so a paraphrasing
/// model never sees values that may come from private data.
pub fn mask_numbers(text: &str) -> (String, Vec<String>) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let prev_word = i > 0 && (chars[i - 1].is_alphanumeric() || chars[i - 1] == '_');
        let starts_number = chars[i].is_ascii_digit()
            || (chars[i] == '-' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()));
        if starts_number && !prev_word {
            let start = i;
            i += 1;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || (matches!(chars[i], '.' | '/' | 'e' | 'E')
                        && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())))
            {
                i += 1;
            }
            values.push(chars[start..i].iter().collect());
            write!(out, "<v{}>", values.len()).unwrap();
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    (out, values)
}

pub fn unmask_numbers(text: &str, values: &[String]) -> String {
    let mut out = text.to_string();
    // Longest placeholders first so <v12> is not hit by <v1>.
    for (k, v) in values.iter().enumerate().rev() {
        out = out.replace(&format!("<v{}>", k + 1), v);
    }
    out
}

/// Template mode returns [`template_summary`]. Model mode asks the backend to
/// paraphrase the masked summary and falls back to the template with a
/// notice when the backend fails.
pub fn interpret(p: &ProblemIR, r: &SolveResult, mode: InterpretMode, gateway: Option<&Gateway>) -> String {
    let summary = template_summary(p, r);
    let (InterpretMode::Model, Some(g)) = (mode, gateway) else {
        return summary;
    };
    let (masked, values) = mask_numbers(&summary);
    match g.ask(None, &interpretation_prompt(&masked)) {
        Ok(reply) => match check_paraphrase(reply.trim(), values.len()) {
            Ok(()) => unmask_numbers(reply.trim(), &values),
            Err(why) => format!("(Paraphrase rejected: {why}.)\n{summary}"),
        },
        Err(e) => format!("(Paraphrase unavailable: {e}.)\n{summary}"),
    }
}

/// Every number shown to the user must come from the solver: the reply may
/// only use the placeholders it was given.
fn check_paraphrase(reply: &str, n: usize) -> Result<(), String> {
    let (_, literals) = mask_numbers(reply);
    if let Some(v) = literals.first() {
        return Err(format!("it introduces the number {v}"));
    }
    let mut rest = reply;
    while let Some(i) = rest.find("<v") {
        rest = &rest[i + 2..];
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if let Ok(k) = digits.parse::<usize>() {
            if k == 0 || k > n {
                return Err(format!("it refers to an unknown value <v{k}>"));
            }
        }
    }
    Ok(())
}
