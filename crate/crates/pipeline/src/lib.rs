//! Conversation pipeline: gates, formulation with a bounded retry loop,
//! data binding, code generation, solve, senseful check and
//! interpretation; event-sourced sessions; the formulation-accuracy
//! evaluation harness.

pub mod codegen;
pub mod data;
pub mod engine;
pub mod eval;
pub mod fixtures;
pub mod formulate;
pub mod gates;
pub mod interpret;
pub mod prompts;
pub mod senseful;
mod serde_ir;
pub mod session;
#[cfg(feature = "testgen")]
pub mod testgen;

use lpchat_gateway::GatewayError;
use thiserror::Error;

pub use codegen::{check_code, generate_and_check_code, CodegenError};
pub use data::{bind_data, DataError, FileSource};
pub use engine::{edit_and_regenerate, post_message, solve_session, EditStage, PipelineConfig, RunContext};
pub use formulate::{
    diagnose_and_retry, formulate, formulate_with_retry, parse_formulation, AttemptRecord, FormulateError,
    Formulated, PipelineFailure, PromptKind,
};
pub use gates::{check_completeness, check_relevance, keyword_completeness, CompletenessReport, Element, JudgedBy};
pub use interpret::{interpret, template_summary, InterpretMode};
pub use senseful::{senseful_check, Requirements, SensefulViolation};
pub use session::{
    Artifacts, Event, FileMeta, Session, SessionError, SessionView, Stage, Status, Turn, Visibility, VisibleArtifacts,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("input text is empty")]
    EmptyInput,
    #[error(transparent)]
    Backend(#[from] GatewayError),
    /// The session is not in a state that allows the request.
    #[error("not ready: {0}")]
    NotReady(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Session(#[from] session::SessionError),
}
