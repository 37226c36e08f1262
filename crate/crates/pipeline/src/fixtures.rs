//! Scripted-backend fixtures for the bundled dataset and demo
//! conversations. The JSON files under `data/` are generated from these
//! functions; a test keeps them in sync.

use lpchat_core::ir::ProblemIR;
use lpchat_gateway::prompts::formulation;
use lpchat_gateway::{PromptTemplate, ScriptedBackend};

use crate::eval::{parse_dataset, EvalSample};
use crate::prompts::{completeness_prompt, formulation_prompt, question, relevance_prompt};

pub const MINI_DATASET: &str = include_str!("../data/mini_dataset.jsonl");

/// Samples whose fixture replies lose one constraint in the perturbed set.
pub const PERTURBED_IDS: [&str; 5] = ["mini-01", "mini-03", "mini-06", "mini-13", "mini-16"];

pub fn mini_dataset() -> Vec<EvalSample> {
    parse_dataset(MINI_DATASET).expect("bundled dataset is valid")
}

fn reply_with(ir: &ProblemIR) -> String {
    format!(
        "The formulation in JSON:\n{}\nEach constraint mirrors one limit stated in the problem.",
        ir.to_json()
    )
}

/// Replies with each sample's gold formulation.
pub fn dataset_fixtures(samples: &[EvalSample], template: &PromptTemplate) -> ScriptedBackend {
    perturbed_fixtures(samples, template, &[])
}

/// Removes the last constraint.
pub fn drop_last_constraint(ir: &ProblemIR) -> ProblemIR {
    let mut out = ir.clone();
    out.constraints.pop();
    out
}

/// Like [`dataset_fixtures`], but samples listed in `ids` reply with one
/// constraint dropped.
pub fn perturbed_fixtures(samples: &[EvalSample], template: &PromptTemplate, ids: &[&str]) -> ScriptedBackend {
    let mut b = ScriptedBackend::default();
    for s in samples {
        let ir = if ids.contains(&s.id.as_str()) {
            drop_last_constraint(&s.gold)
        } else {
            s.gold.clone()
        };
        let prompt = formulation_prompt(template, &question(&s.description, &[])).expect("template fits the cases");
        b.insert(&prompt, reply_with(&ir));
    }
    b
}

/// Three turns that are only jointly complete.
pub const COFFEE_TURNS: [&str; 3] = [
    "I run a coffee shop and want to decide how much coffee to make",
    "I sell lattes for 4 and espressos for 3, and I want to maximize revenue.",
    "Each latte uses 2 units of milk and I have 40 units of milk. I can make at most 30 drinks a day.",
];

pub const COFFEE_FORMULATION: &str = r#"{"variables": [{"name": "lattes", "domain": "integer"}, {"name": "espressos", "domain": "integer"}], "objective": {"sense": "maximize", "terms": {"lattes": 4, "espressos": 3}}, "constraints": [{"name": "milk", "terms": {"lattes": 2}, "sense": "<=", "rhs": 40}, {"name": "drinks", "terms": {"lattes": 1, "espressos": 1}, "sense": "<=", "rhs": 30}]}"#;

/// Accumulated description after the first `k` coffee turns.
pub fn coffee_description(k: usize) -> String {
    COFFEE_TURNS[..k].join("\n")
}

pub fn coffee_fixtures() -> ScriptedBackend {
    let mut b = ScriptedBackend::default();
    b.insert(&relevance_prompt(COFFEE_TURNS[0]), "{\"relevant\": true}");
    b.insert(
        &completeness_prompt(&coffee_description(1)),
        "{\"complete\": false, \"missing\": [\"objective\", \"constraints\", \"parameters\"], \"question\": \"What do you want to maximize or minimize, what does each drink earn, and which limits (milk, time, cups) apply?\"}",
    );
    b.insert(
        &completeness_prompt(&coffee_description(2)),
        "{\"complete\": false, \"missing\": [\"constraints\"], \"question\": \"Which limits apply, such as ingredients on hand or how many drinks you can make per day?\"}",
    );
    b.insert(
        &completeness_prompt(&coffee_description(3)),
        "{\"complete\": true, \"missing\": [], \"question\": \"\"}",
    );
    let prompt = formulation_prompt(&formulation(1), &question(&coffee_description(3), &[])).expect("one shot");
    b.insert(&prompt, format!("Here is the model.\n{COFFEE_FORMULATION}"));
    b
}

/// Production planning whose capacity lives in an uploaded file.
pub const CAPACITY_DESCRIPTION: &str = "I make one product and earn 1 per unit. Production cannot exceed the capacity in the uploaded file capacity.csv (column cap, first row). Maximize profit.";
pub const CAPACITY_FILE: &str = "capacity.csv";

pub const CAPACITY_FORMULATION: &str = r#"{"variables": [{"name": "x", "domain": "continuous"}], "objective": {"sense": "maximize", "terms": {"x": 1}}, "constraints": [{"name": "capacity", "terms": {"x": 1}, "params": {"C": -1}, "sense": "<=", "rhs": 0}], "bindings": [{"parameter": "C", "source": {"kind": "file", "path": "capacity.csv", "column": "cap", "row": 1}}]}"#;

pub fn capacity_fixtures() -> ScriptedBackend {
    let mut b = ScriptedBackend::default();
    b.insert(&relevance_prompt(CAPACITY_DESCRIPTION), "{\"relevant\": true}");
    b.insert(
        &completeness_prompt(CAPACITY_DESCRIPTION),
        "{\"complete\": true, \"missing\": [], \"question\": \"\"}",
    );
    let prompt = formulation_prompt(
        &formulation(1),
        &question(CAPACITY_DESCRIPTION, &[CAPACITY_FILE.to_string()]),
    )
    .expect("one shot");
    b.insert(&prompt, CAPACITY_FORMULATION);
    b
}

pub const OFF_TOPIC: &str = "What's the weather today?";

/// Everything above in one table, for running the service against the
/// scripted backend.
pub fn demo_fixtures() -> ScriptedBackend {
    let mut b = dataset_fixtures(&mini_dataset(), &formulation(1));
    b.extend(coffee_fixtures());
    b.extend(capacity_fixtures());
    b.insert(&relevance_prompt(OFF_TOPIC), "{\"relevant\": false}");
    b
}

/// Pretty JSON for a fixture file, stable across runs.
pub fn fixture_file_text(b: &ScriptedBackend) -> String {
    serde_json::to_string_pretty(b.fixtures()).expect("fixtures serialize") + "\n"
}
