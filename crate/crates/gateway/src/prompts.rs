//! Prompt templates with `{Name}` placeholders.
//!
//! Only the one-shot formulation prompt follows a published wording; the
//! other templates are reconstructions written for this crate.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("unbound placeholder {{{0}}}")]
    UnboundPlaceholder(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub text: String,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            text: text.into(),
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        scan(&self.text, |piece| {
            if let Piece::Placeholder(name) = piece {
                if seen.insert(name.to_string()) {
                    out.push(name.to_string());
                }
            }
        });
        out
    }

    pub fn render(&self, bindings: &BTreeMap<&str, &str>) -> Result<String, RenderError> {
        render(self, bindings)
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

/// Splits `text` into literals and `{Ident}` placeholders. Braces that do
/// not enclose an identifier are literal, so JSON examples survive.
fn scan<'a>(text: &'a str, mut f: impl FnMut(Piece<'a>)) {
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let ident_len = after
            .char_indices()
            .take_while(|(i, c)| c.is_ascii_alphabetic() || *c == '_' || (*i > 0 && c.is_ascii_digit()))
            .map(|(i, c)| i + c.len_utf8())
            .last()
            .unwrap_or(0);
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            f(Piece::Literal(&rest[..open]));
            f(Piece::Placeholder(&after[..ident_len]));
            rest = &after[ident_len + 1..];
        } else {
            f(Piece::Literal(&rest[..=open]));
            rest = after;
        }
    }
    f(Piece::Literal(rest));
}

/// Substitutes every placeholder in one pass; bound values are inserted
/// verbatim and never rescanned.
pub fn render(template: &PromptTemplate, bindings: &BTreeMap<&str, &str>) -> Result<String, RenderError> {
    let mut out = String::with_capacity(template.text.len());
    let mut missing = None;
    scan(&template.text, |piece| match piece {
        Piece::Literal(s) => out.push_str(s),
        Piece::Placeholder(name) => match bindings.get(name) {
            Some(v) => out.push_str(v),
            None => {
                missing.get_or_insert_with(|| name.to_string());
            }
        },
    });
    match missing {
        Some(name) => Err(RenderError::UnboundPlaceholder(name)),
        None => Ok(out),
    }
}

pub const ONE_SHOT: &str = "You are an expert in mathematical programming. Please refer to Case 1 and provide a JSON expression for Problem 1 with explanations. Case1: {Question_and_Answer_of_Case1}, Problem1: {Question}.";

/// The formulation prompt with `shots` worked cases. One shot reproduces
/// [`ONE_SHOT`] exactly.
pub fn formulation(shots: usize) -> PromptTemplate {
    if shots <= 1 {
        return PromptTemplate::new("one_shot", ONE_SHOT);
    }
    let refs: Vec<String> = (1..=shots).map(|k| format!("Case {k}")).collect();
    let cases: Vec<String> = (1..=shots)
        .map(|k| format!("Case{k}: {{Question_and_Answer_of_Case{k}}}"))
        .collect();
    PromptTemplate::new(
        format!("{shots}_shot"),
        format!(
            "You are an expert in mathematical programming. Please refer to {} and provide a JSON expression for Problem 1 with explanations. {}, Problem1: {{Question}}.",
            refs.join(", "),
            cases.join(", ")
        ),
    )
}

/// Text used for one worked case inside a formulation prompt.
pub fn case_text(question: &str, answer_json: &str) -> String {
    format!("Question: {question} Answer: {answer_json}")
}

pub fn system() -> PromptTemplate {
    PromptTemplate::new(
        "system",
        "You model optimization problems. Answer with one JSON object of the form \
{\"variables\": [{\"name\": \"x\", \"domain\": \"continuous|integer|binary\", \"lower\": 0, \"upper\": \"inf\"}], \
\"objective\": {\"sense\": \"maximize|minimize\", \"terms\": {\"x\": 3}, \"constant\": 0}, \
\"constraints\": [{\"name\": \"c1\", \"terms\": {\"x\": 1}, \"sense\": \"<=|>=|=|<|>\", \"rhs\": 5}], \
\"bindings\": [{\"parameter\": \"C\", \"source\": {\"kind\": \"file\", \"path\": \"data.csv\", \"column\": \"cap\", \"row\": 1}}]}. \
Use \"<\" or \">\" when the text says strictly more or less. Refer to uploaded data only through bindings.",
    )
}

pub fn relevance() -> PromptTemplate {
    PromptTemplate::new(
        "relevance",
        "Decide whether the following message asks for help with an optimization problem \
(choosing quantities to maximize or minimize something under limits). \
Reply with JSON {\"relevant\": true} or {\"relevant\": false}.\nMessage: {Description}",
    )
}

pub fn completeness() -> PromptTemplate {
    PromptTemplate::new(
        "completeness",
        "Check whether this optimization problem description states its decision variables, \
its objective, its constraints and the numbers they need. Reply with JSON \
{\"complete\": bool, \"missing\": [subset of \"objective\", \"variables\", \"constraints\", \"parameters\"], \
\"question\": \"one question asking the user for everything missing, empty if complete\"}.\n\
Description: {Description}",
    )
}

pub fn retry() -> PromptTemplate {
    PromptTemplate::new(
        "retry",
        "Your previous answer could not be used.\nPrevious answer: {Previous}\nProblems found: {Diagnostics}\n\
Return a corrected JSON formulation for this problem: {Question}",
    )
}

pub fn interpretation() -> PromptTemplate {
    PromptTemplate::new(
        "interpretation",
        "Rewrite this solver report as a short answer for a non-specialist. Keep every number \
placeholder such as <v1> exactly as written.\nReport: {Summary}",
    )
}

pub fn bootstrap() -> PromptTemplate {
    PromptTemplate::new(
        "bootstrap",
        "Here is a labeled optimization problem.\n{Seed}\nWrite one new problem of a similar kind \
with different story and numbers (variant {Index}). Reply with JSON \
{\"description\": \"...\", \"formulation\": {...}} where formulation uses the same schema.",
    )
}

pub fn by_name(name: &str) -> Option<PromptTemplate> {
    match name {
        "one_shot" => Some(formulation(1)),
        "system" => Some(system()),
        "relevance" => Some(relevance()),
        "completeness" => Some(completeness()),
        "retry" => Some(retry()),
        "interpretation" => Some(interpretation()),
        "bootstrap" => Some(bootstrap()),
        other => other
            .strip_suffix("_shot")
            .and_then(|k| k.parse().ok())
            .map(formulation),
    }
}
