//! Embedded LP/MILP solver.
//!
//! Two-phase primal simplex (Bland's rule) on a dense tableau, wrapped in a
//! best-first branch-and-bound that branches on the most fractional integer
//! variable. Strict inequalities are rewritten by [`strictify`] first and
//! each rewrite is reported in [`SolveResult::relaxations`].

mod bnb;
mod dense;
mod lp_format;
mod simplex;
mod strictify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{validate, ProblemIR, Sense, Violation};
use crate::rational::{parse_rational, to_f64, Rational};

pub use lp_format::{to_lp_format, LpExportError};
pub use strictify::{strictify, Strictified};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Tightening applied to strict rows that cannot be rewritten exactly.
    pub strict_eps: f64,
    /// Total simplex pivots across all branch-and-bound nodes.
    pub max_iterations: usize,
    pub max_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-9,
            integrality_tol: 1e-6,
            strict_eps: 1e-6,
            max_iterations: 100_000,
            max_nodes: 100_000,
        }
    }
}

impl SolverOptions {
    /// `strict_eps` as the exact decimal it was written as.
    pub fn strict_eps_rational(&self) -> Rational {
        parse_rational(&self.strict_eps.to_string()).unwrap_or_else(|| {
            Rational::new(1.into(), 1_000_000.into())
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub simplex_iterations: usize,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff `status` is `Optimal`.
    pub assignment: Option<BTreeMap<String, f64>>,
    pub objective_value: Option<f64>,
    pub relaxations: Vec<String>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.assignment.as_ref()?.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid formulation: {0:?}")]
    InvalidIR(Vec<Violation>),
    #[error("unresolved parameters: {}", .0.join(", "))]
    UnresolvedParameters(Vec<String>),
}

pub fn solve(p: &ProblemIR, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    let violations = validate(p);
    if !violations.is_empty() {
        return Err(SolveError::InvalidIR(violations));
    }
    if !p.is_numeric() {
        return Err(SolveError::UnresolvedParameters(
            p.parameter_usage().into_keys().collect(),
        ));
    }
    let Strictified {
        problem,
        relaxations,
    } = strictify(p, &opts.strict_eps_rational());
    let model = dense::DenseModel::from_problem(&problem);
    let mip = bnb::branch_and_bound(&model, opts);
    let stats = SolveStats {
        simplex_iterations: mip.iterations,
        nodes: mip.nodes,
    };
    let status = match mip.status {
        bnb::MipStatus::Optimal => SolveStatus::Optimal,
        bnb::MipStatus::Infeasible => SolveStatus::Infeasible,
        bnb::MipStatus::Unbounded => SolveStatus::Unbounded,
        bnb::MipStatus::IterationLimit => SolveStatus::IterationLimit,
    };
    if status != SolveStatus::Optimal {
        return Ok(SolveResult {
            status,
            assignment: None,
            objective_value: None,
            relaxations,
            stats,
        });
    }
    let assignment: BTreeMap<String, f64> = model
        .names
        .iter()
        .cloned()
        .zip(mip.x.iter().map(|v| if *v == 0.0 { 0.0 } else { *v }))
        .collect();
    let objective_value = evaluate(&p.objective.expr, &assignment);
    Ok(SolveResult {
        status,
        assignment: Some(assignment),
        objective_value: Some(objective_value),
        relaxations,
        stats,
    })
}

fn evaluate(expr: &crate::ir::LinearExpr, assignment: &BTreeMap<String, f64>) -> f64 {
    let terms = expr.numeric_terms().expect("numeric expression");
    to_f64(expr.constant())
        + terms
            .iter()
            .map(|(name, coef)| to_f64(coef) * assignment.get(*name).copied().unwrap_or(f64::NAN))
            .sum::<f64>()
}

/// Checks an assignment against every constraint (strict senses strictly),
/// every bound and every integrality requirement, using the default
/// tolerances.
pub fn check_feasible(p: &ProblemIR, assignment: &BTreeMap<String, f64>) -> bool {
    let opts = SolverOptions::default();
    check_feasible_with(p, assignment, opts.feasibility_tol, opts.integrality_tol)
}

pub fn check_feasible_with(
    p: &ProblemIR,
    assignment: &BTreeMap<String, f64>,
    feasibility_tol: f64,
    integrality_tol: f64,
) -> bool {
    if !p.is_numeric() {
        return false;
    }
    for v in &p.variables {
        let Some(&x) = assignment.get(&v.name) else {
            return false;
        };
        if !x.is_finite() {
            return false;
        }
        let tol = feasibility_tol * (1.0 + x.abs());
        if x < v.lower.to_f64() - tol || x > v.upper.to_f64() + tol {
            return false;
        }
        if v.domain.is_integral() && (x - x.round()).abs() > integrality_tol {
            return false;
        }
    }
    p.constraints.iter().all(|c| {
        let lhs = evaluate(&c.lhs, assignment);
        let rhs = to_f64(&c.rhs);
        let tol = feasibility_tol * (1.0 + rhs.abs());
        match c.sense {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
            Sense::Lt => lhs < rhs - tol,
            Sense::Gt => lhs > rhs + tol,
        }
    })
}
