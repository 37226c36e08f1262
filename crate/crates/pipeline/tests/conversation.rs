use std::collections::BTreeMap;
use std::sync::Arc;

use lpchat_core::ir::{EquivalenceMode, Sense};
use lpchat_core::lang::{parse, SourceFile};
use lpchat_core::solver::{check_feasible, solve, strictify, SolveStatus, SolverOptions};
use lpchat_gateway::prompts::formulation;
use lpchat_gateway::{Gateway, ScriptedBackend};
use lpchat_pipeline::eval::exact_match;
use lpchat_pipeline::fixtures::{
    capacity_fixtures, coffee_description, coffee_fixtures, dataset_fixtures, mini_dataset, CAPACITY_DESCRIPTION,
    CAPACITY_FILE, COFFEE_TURNS,
};
use lpchat_pipeline::prompts::{completeness_prompt, formulation_prompt, question, relevance_prompt};
use lpchat_pipeline::{
    edit_and_regenerate, formulate, post_message, EditStage, Event, FileMeta, PipelineConfig, RunContext, Session,
    SensefulViolation, Stage, Status,
};

fn run_coffee() -> (Session, Gateway, Vec<String>) {
    let g = Gateway::new(Arc::new(coffee_fixtures()));
    let cfg = PipelineConfig::default();
    let files = BTreeMap::new();
    let ctx = RunContext {
        gateway: &g,
        config: &cfg,
        files: &files,
    };
    let mut s = Session::new("coffee");
    let replies = COFFEE_TURNS
        .iter()
        .map(|t| post_message(&mut s, &ctx, t).unwrap())
        .collect();
    (s, g, replies)
}

#[test]
fn three_turn_conversation_is_gated_on_completeness() {
    let (s, g, replies) = run_coffee();
    let prompts = g.transcript().prompts();
    let is_formulation = |p: &String| p.starts_with("You are an expert in mathematical programming");
    let first_formulation = prompts.iter().position(is_formulation).unwrap();
    let final_check = prompts
        .iter()
        .position(|p| *p == completeness_prompt(&coffee_description(3)))
        .unwrap();
    assert!(first_formulation > final_check);
    assert_eq!(prompts.iter().filter(|p| is_formulation(p)).count(), 1);

    let follow_ups: Vec<&String> = s
        .turns
        .iter()
        .map(|t| &t.reply)
        .filter(|r| r.ends_with('?'))
        .collect();
    assert_eq!(follow_ups.len(), 2);
    assert_eq!(replies[0], *follow_ups[0]);
    assert_eq!(replies[1], *follow_ups[1]);

    assert_eq!(s.status, Status::Solved);
    let r = s.artifacts.solve_result.as_ref().unwrap();
    // lattes <= 20 (milk) and lattes + espressos <= 30, so
    // 4 lattes + 3 espressos = 3 (lattes + espressos) + lattes <= 110.
    assert_eq!(r.objective_value, Some(110.0));
    assert_eq!(r.value("lattes"), Some(20.0));
    assert!(replies[2].contains("objective value 110"));
}

#[test]
fn identical_turns_give_identical_interpretations() {
    let (a, _, _) = run_coffee();
    let (b, _, _) = run_coffee();
    assert_eq!(a.artifacts.interpretation, b.artifacts.interpretation);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn description_edit_reruns_from_completeness() {
    let (mut s, g, _) = run_coffee();
    let cfg = PipelineConfig::default();
    let files = BTreeMap::new();
    let ctx = RunContext {
        gateway: &g,
        config: &cfg,
        files: &files,
    };
    s.take_pending();
    let reply = edit_and_regenerate(&mut s, &ctx, EditStage::Description, &coffee_description(1)).unwrap();
    assert!(reply.ends_with('?'));
    assert_eq!(s.status, Status::Gathering);
    assert!(!s.artifacts.has_from(Stage::Formulation));
    let events = s.take_pending();
    assert!(matches!(events[0], Event::Cleared { from: Stage::Formulation }));

    edit_and_regenerate(&mut s, &ctx, EditStage::Description, &coffee_description(3)).unwrap();
    assert_eq!(s.status, Status::Solved);
}

#[test]
fn file_values_never_reach_the_backend() {
    const SENTINEL: &str = "83725416";
    let g = Gateway::new(Arc::new(capacity_fixtures()));
    let cfg = PipelineConfig::default();
    let files = BTreeMap::from([(CAPACITY_FILE.to_string(), format!("site,cap\nmain,{SENTINEL}\n").into_bytes())]);
    let ctx = RunContext {
        gateway: &g,
        config: &cfg,
        files: &files,
    };
    let mut s = Session::new("privacy");
    s.record(Event::FileUploaded {
        name: CAPACITY_FILE.into(),
        meta: FileMeta {
            size: files[CAPACITY_FILE].len() as u64,
            sha256: String::new(),
        },
    })
    .unwrap();
    post_message(&mut s, &ctx, CAPACITY_DESCRIPTION).unwrap();
    assert_eq!(s.status, Status::Solved, "{:?}", s.failure);
    assert_eq!(s.artifacts.solve_result.as_ref().unwrap().value("x"), Some(83725416.0));
    assert!(!g.transcript().contains(SENTINEL));
    assert!(g.transcript().contains(CAPACITY_FILE));
}

#[test]
fn more_than_becomes_strict_and_solves_strictly() {
    let sample = mini_dataset().into_iter().find(|s| s.id == "mini-06").unwrap();
    assert!(sample.description.contains("more than"));
    let g = Gateway::new(Arc::new(dataset_fixtures(std::slice::from_ref(&sample), &formulation(1))));
    let f = formulate(&question(&sample.description, &[]), &g, &formulation(1)).unwrap();
    let strict_rows: Vec<_> = f.ir.constraints.iter().filter(|c| c.sense == Sense::Gt).collect();
    assert_eq!(strict_rows.len(), 2);

    let mut weak = f.ir.clone();
    for c in &mut weak.constraints {
        if c.sense == Sense::Gt {
            c.sense = Sense::Ge;
        }
    }
    assert!(!exact_match(&f.ir, &weak, EquivalenceMode::Strict).unwrap().matched);

    let st = strictify(&f.ir, &SolverOptions::default().strict_eps_rational());
    let total = st.problem.constraints.iter().find(|c| c.name.as_deref() == Some("total")).unwrap();
    assert_eq!(total.to_string(), "A + B >= 101");
    let more_a = st.problem.constraints.iter().find(|c| c.name.as_deref() == Some("more_a")).unwrap();
    assert_eq!(more_a.to_string(), "A - B >= 1");

    let r = solve(&f.ir, &SolverOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let a = r.assignment.clone().unwrap();
    assert!(a["A"] + a["B"] > 100.0 && a["A"] > a["B"]);
    assert!(check_feasible(&f.ir, &a));
}

#[test]
fn senseful_violations_go_back_to_the_user() {
    let text = "Maximize x where x is at most 2.5 and x must be a whole number.";
    let ir = r#"{"variables": [{"name": "x"}], "objective": {"sense": "maximize", "terms": {"x": 1}}, "constraints": [{"name": "cap", "terms": {"x": 1}, "sense": "<=", "rhs": 2.5}]}"#;
    let mut b = ScriptedBackend::from_pairs([
        (relevance_prompt(text), "{\"relevant\": true}"),
        (completeness_prompt(text), "{\"complete\": true}"),
    ]);
    b.insert(&formulation_prompt(&formulation(1), text).unwrap(), ir);
    let g = Gateway::new(Arc::new(b));
    let cfg = PipelineConfig::default();
    let files = BTreeMap::new();
    let ctx = RunContext {
        gateway: &g,
        config: &cfg,
        files: &files,
    };
    let mut s = Session::new("s");
    let reply = post_message(&mut s, &ctx, text).unwrap();
    assert!(matches!(
        s.artifacts.senseful.as_slice(),
        [SensefulViolation::NonIntegerValue { variable, value }] if variable == "x" && *value == 2.5
    ));
    assert!(reply.contains("Should x be restricted to integers?"));
    assert_eq!(g.transcript().len(), 3, "no silent re-formulation or re-solve");
}

#[test]
fn edited_strict_code_flows_into_strictify() {
    let (mut s, g, _) = run_coffee();
    let cfg = PipelineConfig::default();
    let files = BTreeMap::new();
    let ctx = RunContext {
        gateway: &g,
        config: &cfg,
        files: &files,
    };
    let code = s.artifacts.code.clone().unwrap().text.replace("<= 40", "< 40");
    assert!(parse(&SourceFile::user_edited(code.as_str())).is_ok());
    edit_and_regenerate(&mut s, &ctx, EditStage::Code, &code).unwrap();
    let r = s.artifacts.solve_result.as_ref().unwrap();
    assert_eq!(r.value("lattes"), Some(19.0));
    assert!(r.relaxations.iter().any(|n| n.contains("strict milk")));
}
