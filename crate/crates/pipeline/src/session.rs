//! Event-sourced conversation state.
//!
//! Every state transition is an [`Event`]; a session is the fold of its
//! events, so replaying a stored log rebuilds it exactly. Nothing here reads
//! a clock or a random source.

use std::collections::BTreeMap;

use lpchat_core::ir::ProblemIR;
use lpchat_core::lang::{Diagnostic, SourceFile};
use lpchat_core::solver::SolveResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::CompletenessReport;
use crate::senseful::SensefulViolation;

/// Artifact stages in pipeline order; clearing a stage clears everything
/// after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Description,
    Formulation,
    Code,
    SolveResult,
    Interpretation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Gathering,
    Ready,
    Solved,
    Failed,
    /// Reported by the service while a run is in flight; never recorded.
    Running,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visibility {
    pub show_formulas: bool,
    pub show_code: bool,
}

impl Default for Visibility {
    fn default() -> Self {
        Visibility {
            show_formulas: true,
            show_code: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub user: String,
    pub reply: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMeta {
    pub size: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub description: Option<String>,
    #[serde(with = "crate::serde_ir::option")]
    pub formulation: Option<ProblemIR>,
    pub code: Option<SourceFile>,
    pub solve_result: Option<SolveResult>,
    pub interpretation: Option<String>,
    /// Questions raised by the senseful check for the staged solution.
    pub senseful: Vec<SensefulViolation>,
}

impl Artifacts {
    fn has(&self, stage: Stage) -> bool {
        match stage {
            Stage::Description => self.description.is_some(),
            Stage::Formulation => self.formulation.is_some(),
            Stage::Code => self.code.is_some(),
            Stage::SolveResult => self.solve_result.is_some(),
            Stage::Interpretation => self.interpretation.is_some(),
        }
    }

    /// True when `stage` or any later stage is staged.
    pub fn has_from(&self, stage: Stage) -> bool {
        [
            Stage::Description,
            Stage::Formulation,
            Stage::Code,
            Stage::SolveResult,
            Stage::Interpretation,
        ]
        .into_iter()
        .filter(|s| *s >= stage)
        .any(|s| self.has(s))
    }

    fn clear_from(&mut self, stage: Stage) {
        if stage <= Stage::Description {
            self.description = None;
        }
        if stage <= Stage::Formulation {
            self.formulation = None;
        }
        if stage <= Stage::Code {
            self.code = None;
        }
        if stage <= Stage::SolveResult {
            self.solve_result = None;
        }
        if stage <= Stage::Interpretation {
            self.interpretation = None;
            self.senseful.clear();
        }
    }

    /// Monotone staging: code needs a formulation, a solve result needs
    /// code, an interpretation needs a solve result.
    pub fn staging_violation(&self) -> Option<&'static str> {
        if self.code.is_some() && self.formulation.is_none() {
            Some("code staged without a formulation")
        } else if self.solve_result.is_some() && self.code.is_none() {
            Some("solve result staged without code")
        } else if self.interpretation.is_some() && self.solve_result.is_none() {
            Some("interpretation staged without a solve result")
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: String,
    },
    TurnRecorded {
        user: String,
        reply: String,
    },
    DescriptionSet {
        text: String,
    },
    CompletenessRecorded {
        report: CompletenessReport,
    },
    FormulationSet {
        #[serde(with = "crate::serde_ir")]
        formulation: ProblemIR,
    },
    CodeSet {
        code: SourceFile,
    },
    SolveResultSet {
        result: SolveResult,
    },
    InterpretationSet {
        text: String,
        senseful: Vec<SensefulViolation>,
    },
    Cleared {
        from: Stage,
    },
    DiagnosticsSet {
        diagnostics: Vec<Diagnostic>,
        message: Option<String>,
    },
    StatusChanged {
        status: Status,
    },
    VisibilityChanged {
        visibility: Visibility,
    },
    FileUploaded {
        name: String,
        meta: FileMeta,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Created { .. } => "created",
            Event::TurnRecorded { .. } => "turn_recorded",
            Event::DescriptionSet { .. } => "description_set",
            Event::CompletenessRecorded { .. } => "completeness_recorded",
            Event::FormulationSet { .. } => "formulation_set",
            Event::CodeSet { .. } => "code_set",
            Event::SolveResultSet { .. } => "solve_result_set",
            Event::InterpretationSet { .. } => "interpretation_set",
            Event::Cleared { .. } => "cleared",
            Event::DiagnosticsSet { .. } => "diagnostics_set",
            Event::StatusChanged { .. } => "status_changed",
            Event::VisibilityChanged { .. } => "visibility_changed",
            Event::FileUploaded { .. } => "file_uploaded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {event} rejected: {reason}")]
pub struct SessionError {
    pub event: &'static str,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub turns: Vec<Turn>,
    pub artifacts: Artifacts,
    /// Latest completeness judgement of the working description.
    pub completeness: Option<CompletenessReport>,
    pub status: Status,
    pub visibility: Visibility,
    pub files: BTreeMap<String, FileMeta>,
    pub diagnostics: Vec<Diagnostic>,
    pub failure: Option<String>,
    #[serde(skip)]
    pending: Vec<Event>,
}

impl Session {
    /// A fresh session; its `Created` event is pending.
    pub fn new(id: impl Into<String>) -> Self {
        let mut s = Session::default();
        s.record(Event::Created { id: id.into() }).expect("fresh session accepts Created");
        s
    }

    /// Folds a stored event log. The first event must be `Created`.
    pub fn replay(events: impl IntoIterator<Item = Event>) -> Result<Session, SessionError> {
        let mut s = Session::default();
        for e in events {
            s.apply(&e)?;
        }
        if s.id.is_empty() {
            return Err(SessionError {
                event: "created",
                reason: "log has no Created event".into(),
            });
        }
        Ok(s)
    }

    /// Applies `e` and queues it for persistence.
    pub fn record(&mut self, e: Event) -> Result<(), SessionError> {
        self.apply(&e)?;
        self.pending.push(e);
        Ok(())
    }

    /// Events recorded since the last call, in order.
    pub fn take_pending(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.pending)
    }

    pub fn file_names(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    pub fn apply(&mut self, e: &Event) -> Result<(), SessionError> {
        let reject = |reason: &str| {
            Err(SessionError {
                event: e.kind(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() && !matches!(e, Event::Created { .. }) {
            return reject("session not created yet");
        }
        match e {
            Event::Created { id } => {
                if !self.id.is_empty() {
                    return reject("session already created");
                }
                if id.is_empty() {
                    return reject("empty id");
                }
                self.id = id.clone();
            }
            Event::TurnRecorded { user, reply } => self.turns.push(Turn {
                user: user.clone(),
                reply: reply.clone(),
            }),
            Event::DescriptionSet { text } => self.artifacts.description = Some(text.clone()),
            Event::CompletenessRecorded { report } => self.completeness = Some(report.clone()),
            Event::FormulationSet { formulation } => self.artifacts.formulation = Some(formulation.clone()),
            Event::CodeSet { code } => {
                if self.artifacts.formulation.is_none() {
                    return reject("code needs a formulation");
                }
                self.artifacts.code = Some(code.clone());
            }
            Event::SolveResultSet { result } => {
                if self.artifacts.code.is_none() {
                    return reject("solve result needs code");
                }
                self.artifacts.solve_result = Some(result.clone());
            }
            Event::InterpretationSet { text, senseful } => {
                if self.artifacts.solve_result.is_none() {
                    return reject("interpretation needs a solve result");
                }
                self.artifacts.interpretation = Some(text.clone());
                self.artifacts.senseful = senseful.clone();
            }
            Event::Cleared { from } => {
                self.artifacts.clear_from(*from);
                if *from <= Stage::Description {
                    self.completeness = None;
                }
            }
            Event::DiagnosticsSet { diagnostics, message } => {
                self.diagnostics = diagnostics.clone();
                self.failure = message.clone();
            }
            Event::StatusChanged { status } => {
                if *status == Status::Running {
                    return reject("running is never recorded");
                }
                self.status = *status;
            }
            Event::VisibilityChanged { visibility } => self.visibility = *visibility,
            Event::FileUploaded { name, meta } => {
                self.files.insert(name.clone(), meta.clone());
            }
        }
        Ok(())
    }

    /// Client-facing snapshot: artifacts hidden by the visibility flags are
    /// left out entirely.
    pub fn view(&self) -> SessionView {
        let a = &self.artifacts;
        SessionView {
            id: self.id.clone(),
            status: self.status,
            turns: self.turns.clone(),
            visibility: self.visibility,
            files: self.files.clone(),
            completeness: self.completeness.clone(),
            diagnostics: self.diagnostics.clone(),
            failure: self.failure.clone(),
            visible: VisibleArtifacts {
                description: a.description.clone(),
                formulation: a
                    .formulation
                    .as_ref()
                    .filter(|_| self.visibility.show_formulas)
                    .map(ProblemIR::to_json),
                code: a.code.clone().filter(|_| self.visibility.show_code),
                solve_result: a.solve_result.clone(),
                interpretation: a.interpretation.clone(),
                senseful: a.senseful.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleArtifacts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formulation: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<SourceFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_result: Option<SolveResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub senseful: Vec<SensefulViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: Status,
    pub turns: Vec<Turn>,
    pub visibility: Visibility,
    pub files: BTreeMap<String, FileMeta>,
    pub completeness: Option<CompletenessReport>,
    pub diagnostics: Vec<Diagnostic>,
    pub failure: Option<String>,
    pub visible: VisibleArtifacts,
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpchat_core::lang::parse;

    fn ir() -> ProblemIR {
        parse(&SourceFile::generated("var x >= 0; minimize cost: x; s.t. c1: x >= 20;")).unwrap()
    }

    #[test]
    fn replay_rebuilds_the_session() {
        let mut s = Session::new("s1");
        s.record(Event::DescriptionSet { text: "d".into() }).unwrap();
        s.record(Event::FormulationSet { formulation: ir() }).unwrap();
        s.record(Event::CodeSet {
            code: SourceFile::generated("var x;"),
        })
        .unwrap();
        s.record(Event::TurnRecorded {
            user: "hi".into(),
            reply: "hello".into(),
        })
        .unwrap();
        let log: Vec<String> = s
            .take_pending()
            .iter()
            .map(|e| serde_json::to_string(e).unwrap())
            .collect();
        let replayed = Session::replay(log.iter().map(|l| serde_json::from_str(l).unwrap())).unwrap();
        assert_eq!(
            serde_json::to_string(&replayed).unwrap(),
            serde_json::to_string(&s).unwrap()
        );
        assert_eq!(replayed, s);
    }

    #[test]
    fn staging_is_monotone() {
        let mut s = Session::new("s1");
        let err = s.record(Event::CodeSet {
            code: SourceFile::generated("var x;"),
        });
        assert!(err.is_err());
        assert!(s.take_pending().len() == 1, "rejected events are not queued");
        assert!(Session::replay([Event::DescriptionSet { text: "d".into() }]).is_err());
        assert!(Session::replay([]).is_err());
    }

    #[test]
    fn clearing_removes_downstream_only() {
        let mut s = Session::new("s1");
        s.record(Event::DescriptionSet { text: "d".into() }).unwrap();
        s.record(Event::FormulationSet { formulation: ir() }).unwrap();
        s.record(Event::CodeSet {
            code: SourceFile::generated("var x;"),
        })
        .unwrap();
        s.record(Event::Cleared { from: Stage::Code }).unwrap();
        assert!(s.artifacts.formulation.is_some());
        assert!(!s.artifacts.has_from(Stage::Code));
        assert!(s.artifacts.staging_violation().is_none());
    }

    #[test]
    fn hidden_artifacts_are_absent_from_the_view() {
        let mut s = Session::new("s1");
        s.record(Event::FormulationSet { formulation: ir() }).unwrap();
        s.record(Event::VisibilityChanged {
            visibility: Visibility {
                show_formulas: false,
                show_code: true,
            },
        })
        .unwrap();
        let view = serde_json::to_value(s.view()).unwrap();
        assert!(view["visible"].get("formulation").is_none());
        assert!(s.artifacts.formulation.is_some());
    }
}
