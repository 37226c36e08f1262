//! Formulation-accuracy evaluation.

pub mod bootstrap;
pub mod dataset;
pub mod metric;
pub mod report;

pub use bootstrap::{bootstrap_generate, write_queue, BootstrapError, Candidate};
pub use dataset::{load_dataset, parse_dataset, to_jsonl, DatasetError, EvalSample, Language};
pub use metric::{alpha_match, compare_canonical, exact_match, ElementClass, MatchOutcome, Mismatch};
pub use report::{evaluate, render_table, EvalError, EvalOptions, EvalReport, Verdict};
