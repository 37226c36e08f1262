//! Drives a session through the pipeline stages.
//!
//! Gate order is fixed: relevance (first turn only), completeness,
//! formulate with retry, bind data, generate code, grammar check, solve,
//! senseful check, interpret. Every transition is recorded as a session
//! event. Backend failures in the gates surface as errors before anything
//! is recorded; later failures leave the session `failed` with diagnostics.

use lpchat_core::ir::{validate, ProblemIR};
use lpchat_core::lang::{Diagnostic, SourceFile};
use lpchat_core::solver::{solve, SolveStatus, SolverOptions};
use lpchat_gateway::prompts::formulation;
use lpchat_gateway::Gateway;
use serde::{Deserialize, Serialize};

use crate::codegen::{check_code, generate_and_check_code};
use crate::data::{bind_data, FileSource};
use crate::formulate::formulate_with_retry;
use crate::gates::{check_completeness, check_relevance};
use crate::interpret::{interpret, InterpretMode};
use crate::prompts::{question, GUIDANCE};
use crate::senseful::{senseful_check, Requirements};
use crate::session::{Event, Session, Stage, Status};
use crate::PipelineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub max_retries: usize,
    /// Worked cases in the formulation prompt (1 to 3).
    pub shots: usize,
    pub interpret: InterpretMode,
    pub solver: SolverOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_retries: 2,
            shots: 1,
            interpret: InterpretMode::Template,
            solver: SolverOptions::default(),
        }
    }
}

/// Everything a run needs besides the session itself.
pub struct RunContext<'a> {
    pub gateway: &'a Gateway,
    pub config: &'a PipelineConfig,
    pub files: &'a dyn FileSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditStage {
    Description,
    Formulation,
    Code,
}

impl std::str::FromStr for EditStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "description" => Ok(EditStage::Description),
            "formulation" => Ok(EditStage::Formulation),
            "code" => Ok(EditStage::Code),
            other => Err(format!("unknown stage {other:?}")),
        }
    }
}

/// Handles one user turn and returns the assistant reply: guidance, a
/// follow-up question, a failure explanation, or the interpretation.
pub fn post_message(s: &mut Session, ctx: &RunContext, text: &str) -> Result<String, PipelineError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let description = match &s.artifacts.description {
        Some(d) => format!("{d}\n{text}"),
        None => {
            if !check_relevance(text, ctx.gateway)? {
                s.record(Event::TurnRecorded {
                    user: text.to_string(),
                    reply: GUIDANCE.to_string(),
                })?;
                return Ok(GUIDANCE.to_string());
            }
            text.to_string()
        }
    };
    let reply = run_from_description(s, ctx, description)?;
    s.record(Event::TurnRecorded {
        user: text.to_string(),
        reply: reply.clone(),
    })?;
    Ok(reply)
}

/// Replaces one artifact and regenerates everything after it.
pub fn edit_and_regenerate(
    s: &mut Session,
    ctx: &RunContext,
    stage: EditStage,
    content: &str,
) -> Result<String, PipelineError> {
    match stage {
        EditStage::Description => {
            if content.trim().is_empty() {
                return Err(PipelineError::EmptyInput);
            }
            run_from_description(s, ctx, content.trim().to_string())
        }
        EditStage::Formulation => {
            if s.artifacts.formulation.is_none() {
                return Err(PipelineError::NotReady("no formulation to edit".into()));
            }
            clear_from(s, Stage::Code)?;
            let ir = match parse_formulation_edit(content) {
                Ok(ir) => ir,
                Err(message) => return fail(s, Vec::new(), message),
            };
            clear_diagnostics(s)?;
            s.record(Event::FormulationSet { formulation: ir })?;
            run_from_formulation(s, ctx)
        }
        EditStage::Code => {
            if s.artifacts.code.is_none() {
                return Err(PipelineError::NotReady("no code to edit".into()));
            }
            clear_from(s, Stage::SolveResult)?;
            clear_diagnostics(s)?;
            s.record(Event::CodeSet {
                code: SourceFile::user_edited(content),
            })?;
            run_from_code(s, ctx)
        }
    }
}

/// Solves the staged code again. Needs grammar-clean code.
pub fn solve_session(s: &mut Session, ctx: &RunContext) -> Result<String, PipelineError> {
    let code = s
        .artifacts
        .code
        .clone()
        .ok_or_else(|| PipelineError::NotReady("no code staged".into()))?;
    let ir = check_code(&code).map_err(|d| PipelineError::NotReady(format!("code has {} grammar error(s)", d.len())))?;
    clear_from(s, Stage::SolveResult)?;
    clear_diagnostics(s)?;
    match bind_data(&ir, ctx.files) {
        Ok(bound) => run_solve(s, ctx, &bound),
        Err(e) => fail(s, Vec::new(), format!("data binding failed: {e}")),
    }
}

fn parse_formulation_edit(content: &str) -> Result<ProblemIR, String> {
    let value: serde_json::Value =
        serde_json::from_str(content).map_err(|e| format!("formulation is not valid JSON: {e}"))?;
    let ir = ProblemIR::from_json(&value).map_err(|e| format!("formulation does not match the schema: {e}"))?;
    let violations = validate(&ir);
    if violations.is_empty() {
        Ok(ir)
    } else {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(format!("formulation is invalid: {}", list.join("; ")))
    }
}

fn set_status(s: &mut Session, status: Status) -> Result<(), PipelineError> {
    if s.status != status {
        s.record(Event::StatusChanged { status })?;
    }
    Ok(())
}

fn clear_from(s: &mut Session, stage: Stage) -> Result<(), PipelineError> {
    if s.artifacts.has_from(stage) {
        s.record(Event::Cleared { from: stage })?;
    }
    Ok(())
}

fn clear_diagnostics(s: &mut Session) -> Result<(), PipelineError> {
    if !s.diagnostics.is_empty() || s.failure.is_some() {
        s.record(Event::DiagnosticsSet {
            diagnostics: Vec::new(),
            message: None,
        })?;
    }
    Ok(())
}

/// Marks the session failed and returns the reply explaining why.
fn fail(s: &mut Session, diagnostics: Vec<Diagnostic>, message: String) -> Result<String, PipelineError> {
    let mut reply = message.clone();
    for d in &diagnostics {
        reply.push_str(&format!("\n  line {}, column {}: {}", d.span.line, d.span.column, d.message));
    }
    s.record(Event::DiagnosticsSet {
        diagnostics,
        message: Some(message),
    })?;
    set_status(s, Status::Failed)?;
    Ok(reply)
}

fn run_from_description(s: &mut Session, ctx: &RunContext, description: String) -> Result<String, PipelineError> {
    // The only backend call that may fail outright happens before any event.
    let report = check_completeness(&description, ctx.gateway)?;
    clear_diagnostics(s)?;
    clear_from(s, Stage::Formulation)?;
    s.record(Event::DescriptionSet {
        text: description.clone(),
    })?;
    s.record(Event::CompletenessRecorded { report: report.clone() })?;
    if !report.complete {
        set_status(s, Status::Gathering)?;
        return Ok(report.follow_up_question);
    }
    let q = question(&description, &s.file_names());
    match formulate_with_retry(&q, ctx.gateway, &formulation(ctx.config.shots), ctx.config.max_retries) {
        Ok(f) => {
            s.record(Event::FormulationSet { formulation: f.ir })?;
            run_from_formulation(s, ctx)
        }
        Err(failure) => fail(
            s,
            Vec::new(),
            format!(
                "I could not turn the description into a valid model after {} attempt(s): {}",
                failure.attempts.len(),
                failure.last_error()
            ),
        ),
    }
}

fn run_from_formulation(s: &mut Session, ctx: &RunContext) -> Result<String, PipelineError> {
    let ir = s.artifacts.formulation.clone().expect("caller staged a formulation");
    let bound = match bind_data(&ir, ctx.files) {
        Ok(b) => b,
        Err(e) => return fail(s, Vec::new(), format!("data binding failed: {e}")),
    };
    let code = match generate_and_check_code(&bound) {
        Ok(c) => c,
        Err(e) => return fail(s, Vec::new(), format!("code generation failed: {e}")),
    };
    s.record(Event::CodeSet { code })?;
    run_from_code(s, ctx)
}

fn run_from_code(s: &mut Session, ctx: &RunContext) -> Result<String, PipelineError> {
    let code = s.artifacts.code.clone().expect("caller staged code");
    let ir = match check_code(&code) {
        Ok(ir) => ir,
        Err(diags) => return fail(s, diags, "The code has grammar errors, so it was not solved.".into()),
    };
    let bound = match bind_data(&ir, ctx.files) {
        Ok(b) => b,
        Err(e) => return fail(s, Vec::new(), format!("data binding failed: {e}")),
    };
    set_status(s, Status::Ready)?;
    run_solve(s, ctx, &bound)
}

fn run_solve(s: &mut Session, ctx: &RunContext, ir: &ProblemIR) -> Result<String, PipelineError> {
    let result = match solve(ir, &ctx.config.solver) {
        Ok(r) => r,
        Err(e) => return fail(s, Vec::new(), format!("the solver rejected the model: {e}")),
    };
    s.record(Event::SolveResultSet { result: result.clone() })?;
    let requirements = Requirements::from_description(s.artifacts.description.as_deref().unwrap_or(""));
    let senseful = if result.status == SolveStatus::Optimal {
        senseful_check(ir, &result, &requirements)
    } else {
        Vec::new()
    };
    let text = interpret(ir, &result, ctx.config.interpret, Some(ctx.gateway));
    let mut reply = text.clone();
    for v in &senseful {
        reply.push('\n');
        reply.push_str(&v.question());
    }
    s.record(Event::InterpretationSet { text, senseful })?;
    set_status(s, Status::Solved)?;
    Ok(reply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::{completeness_prompt, formulation_prompt, relevance_prompt};
    use lpchat_gateway::ScriptedBackend;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    const COMPLETE: &str = "{\"complete\": true, \"missing\": []}";
    const IR: &str = r#"{"variables": [{"name": "x", "lower": 0}, {"name": "y", "lower": 0}],
        "objective": {"sense": "maximize", "terms": {"x": 3, "y": 2}},
        "constraints": [{"name": "c1", "terms": {"x": 1, "y": 1}, "sense": "<=", "rhs": 10}, {"name": "c2", "terms": {"x": 1}, "sense": "<=", "rhs": 4}]}"#;

    fn gateway(text: &str) -> Gateway {
        let mut b = ScriptedBackend::from_pairs([
            (relevance_prompt(text), "{\"relevant\": true}".to_string()),
            (completeness_prompt(text), COMPLETE.to_string()),
        ]);
        b.insert(&formulation_prompt(&formulation(1), text).unwrap(), IR);
        Gateway::new(Arc::new(b))
    }

    fn solved() -> (Session, Gateway, PipelineConfig) {
        let text = "Maximize 3x + 2y with x + y at most 10 and x at most 4.";
        let g = gateway(text);
        let cfg = PipelineConfig::default();
        let mut s = Session::new("t");
        let files = BTreeMap::new();
        let ctx = RunContext {
            gateway: &g,
            config: &cfg,
            files: &files,
        };
        let reply = post_message(&mut s, &ctx, text).unwrap();
        assert!(reply.contains("objective value 24"), "{reply}");
        (s, g, cfg)
    }

    #[test]
    fn complete_turn_stages_everything() {
        let (s, _, _) = solved();
        assert_eq!(s.status, Status::Solved);
        assert!(s.artifacts.interpretation.is_some());
        assert_eq!(s.turns.len(), 1);
    }

    #[test]
    fn formulation_edit_regenerates_downstream() {
        let (mut s, g, cfg) = solved();
        let files = BTreeMap::new();
        let ctx = RunContext {
            gateway: &g,
            config: &cfg,
            files: &files,
        };
        let old_code = s.artifacts.code.clone().unwrap();
        let edited = IR.replace("\"rhs\": 10", "\"rhs\": 12");
        let reply = edit_and_regenerate(&mut s, &ctx, EditStage::Formulation, &edited).unwrap();
        assert!(reply.contains("objective value 28"), "{reply}");
        assert_ne!(s.artifacts.code.clone().unwrap(), old_code);
        let pending = s.take_pending();
        assert!(pending.iter().any(|e| matches!(e, Event::Cleared { from: Stage::Code })));
    }

    #[test]
    fn broken_code_blocks_solving() {
        let (mut s, g, cfg) = solved();
        let files = BTreeMap::new();
        let ctx = RunContext {
            gateway: &g,
            config: &cfg,
            files: &files,
        };
        edit_and_regenerate(&mut s, &ctx, EditStage::Code, "var x;\nmaximize obj: x").unwrap();
        assert_eq!(s.status, Status::Failed);
        assert_eq!(s.diagnostics[0].span.line, 2);
        assert!(s.artifacts.solve_result.is_none());
        assert!(matches!(solve_session(&mut s, &ctx), Err(PipelineError::NotReady(_))));
    }

    #[test]
    fn irrelevant_first_turn_gets_guidance() {
        let text = "What's the weather today?";
        let g = Gateway::new(Arc::new(ScriptedBackend::from_pairs([(
            relevance_prompt(text),
            "{\"relevant\": false}",
        )])));
        let cfg = PipelineConfig::default();
        let files = BTreeMap::new();
        let ctx = RunContext {
            gateway: &g,
            config: &cfg,
            files: &files,
        };
        let mut s = Session::new("t");
        assert_eq!(post_message(&mut s, &ctx, text).unwrap(), GUIDANCE);
        assert!(s.artifacts.description.is_none());
        assert_eq!(g.transcript().len(), 1);
    }
}
