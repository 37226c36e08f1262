//! Exact prompt texts the pipeline sends. Scripted fixtures are keyed on
//! these strings, so anything that builds fixtures must go through here.

use std::collections::BTreeMap;

use lpchat_gateway::prompts::{self, case_text, PromptTemplate};
use lpchat_gateway::RenderError;

/// Worked examples for the formulation prompt, in order of use.
pub const CASES: &[(&str, &str)] = &[
    (
        "A factory produces two products, P and Q. Each unit of P earns 40 and each unit of Q earns 30. \
Each unit of P needs 2 machine hours and each unit of Q needs 1, with 100 machine hours available. \
At most 40 units of Q can be sold. How many units of each should be produced to maximize profit?",
        r#"{"variables": [{"name": "P", "domain": "continuous"}, {"name": "Q", "domain": "continuous"}], "objective": {"sense": "maximize", "terms": {"P": 40, "Q": 30}}, "constraints": [{"name": "machine", "terms": {"P": 2, "Q": 1}, "sense": "<=", "rhs": 100}, {"name": "demand", "terms": {"Q": 1}, "sense": "<=", "rhs": 40}]}"#,
    ),
    (
        "A dietitian mixes rice and beans. Rice costs 1.5 per cup and has 4 grams of protein; beans cost 2 per cup and have 9 grams of protein. \
The mix needs at least 30 grams of protein and at most 6 cups in total. Minimize the cost.",
        r#"{"variables": [{"name": "rice", "domain": "continuous"}, {"name": "beans", "domain": "continuous"}], "objective": {"sense": "minimize", "terms": {"rice": 1.5, "beans": 2}}, "constraints": [{"name": "protein", "terms": {"rice": 4, "beans": 9}, "sense": ">=", "rhs": 30}, {"name": "cups", "terms": {"rice": 1, "beans": 1}, "sense": "<=", "rhs": 6}]}"#,
    ),
    (
        "A school buys buses (capacity 50, cost 300) and vans (capacity 12, cost 90) to carry more than 400 students. \
Vehicles come in whole units. Minimize the cost.",
        r#"{"variables": [{"name": "buses", "domain": "integer"}, {"name": "vans", "domain": "integer"}], "objective": {"sense": "minimize", "terms": {"buses": 300, "vans": 90}}, "constraints": [{"name": "seats", "terms": {"buses": 50, "vans": 12}, "sense": ">", "rhs": 400}]}"#,
    ),
];

pub const GUIDANCE: &str = "I can help with optimization problems: tell me what you need to decide, \
what you want to maximize or minimize, and which limits apply (capacities, budgets, demands).";

fn bind<'a>(pairs: &[(&'a str, &'a str)]) -> BTreeMap<&'a str, &'a str> {
    pairs.iter().copied().collect()
}

/// The problem text shown to the model: the description plus the names
/// (never the contents) of any uploaded data files.
pub fn question(description: &str, files: &[String]) -> String {
    if files.is_empty() {
        description.to_string()
    } else {
        format!(
            "{description}\nData files available (refer to their values only through file bindings): {}",
            files.join(", ")
        )
    }
}

/// Fails when the template asks for more worked cases than [`CASES`] has.
pub fn formulation_prompt(template: &PromptTemplate, question: &str) -> Result<String, RenderError> {
    let case_texts: Vec<String> = CASES.iter().map(|(q, a)| case_text(q, a)).collect();
    let names: Vec<String> = (1..=CASES.len())
        .map(|k| format!("Question_and_Answer_of_Case{k}"))
        .collect();
    let mut bindings: BTreeMap<&str, &str> = names
        .iter()
        .zip(&case_texts)
        .map(|(n, t)| (n.as_str(), t.as_str()))
        .collect();
    bindings.insert("Question", question);
    template.render(&bindings)
}

pub fn relevance_prompt(text: &str) -> String {
    prompts::relevance()
        .render(&bind(&[("Description", text)]))
        .expect("bound")
}

pub fn completeness_prompt(description: &str) -> String {
    prompts::completeness()
        .render(&bind(&[("Description", description)]))
        .expect("bound")
}

pub fn retry_prompt(previous: &str, diagnostics: &str, question: &str) -> String {
    prompts::retry()
        .render(&bind(&[
            ("Previous", previous),
            ("Diagnostics", diagnostics),
            ("Question", question),
        ]))
        .expect("bound")
}

pub fn interpretation_prompt(summary: &str) -> String {
    prompts::interpretation()
        .render(&bind(&[("Summary", summary)]))
        .expect("bound")
}

/// Fails when `template` uses placeholders other than `Seed` and `Index`.
pub fn bootstrap_prompt(template: &PromptTemplate, seed: &str, index: usize) -> Result<String, RenderError> {
    template.render(&bind(&[("Seed", seed), ("Index", &index.to_string())]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpchat_core::ir::{validate, ProblemIR};

    #[test]
    fn worked_cases_are_valid_formulations() {
        for (_, answer) in CASES {
            let ir = ProblemIR::from_json(&serde_json::from_str(answer).unwrap()).unwrap();
            assert!(validate(&ir).is_empty());
        }
    }

    #[test]
    fn one_shot_prompt_uses_the_first_case() {
        let text = formulation_prompt(&prompts::formulation(1), "Q?").unwrap();
        assert!(text.starts_with("You are an expert in mathematical programming. Please refer to Case 1"));
        assert!(text.contains("Case1: Question: A factory produces"));
        assert!(text.ends_with("Problem1: Q?."));
        let three = formulation_prompt(&prompts::formulation(3), "Q?").unwrap();
        assert!(formulation_prompt(&prompts::formulation(4), "Q?").is_err());
        assert!(three.contains("Case3: Question: A school buys"));
    }

    #[test]
    fn file_names_but_nothing_else() {
        let q = question("Use capacity.csv.", &["capacity.csv".into()]);
        assert!(q.ends_with("capacity.csv"));
        assert_eq!(question("d", &[]), "d");
    }
}
