use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use super::SourceFile;
use crate::ir::{validate, BindingSource, ProblemIR, Violation};
use crate::rational::{format_rational, ExtRational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrintError {
    #[error("invalid formulation: {0:?}")]
    InvalidIR(Vec<Violation>),
    #[error("cannot express in MiniAPL: {0}")]
    Inexpressible(String),
}

/// Renders a formulation as MiniAPL. Output is a pure function of the
/// input and always parses back to a canonically equal problem.
pub fn print(p: &ProblemIR) -> Result<SourceFile, PrintError> {
    let violations = validate(p);
    if !violations.is_empty() {
        return Err(PrintError::InvalidIR(violations));
    }
    for expr in p.expressions() {
        if let Some((var, coef)) = expr.terms().find(|(_, c)| c.as_num().is_none()) {
            return Err(PrintError::Inexpressible(format!(
                "symbolic coefficient {coef} on {var}; bind data first"
            )));
        }
        if let Some((param, _)) = expr.params().find(|(r, _)| !r.index.is_empty()) {
            return Err(PrintError::Inexpressible(format!(
                "indexed parameter {param}; bind data first"
            )));
        }
    }

    let mut out = String::new();
    let mut declared = BTreeSet::new();
    for b in &p.bindings {
        match &b.source {
            BindingSource::Scalar(v) => {
                writeln!(out, "param {} = {};", b.parameter, format_rational(v)).unwrap();
            }
            BindingSource::File { .. } => writeln!(out, "param {};", b.parameter).unwrap(),
            BindingSource::Vector(_) | BindingSource::Table(_) => continue,
        }
        declared.insert(b.parameter.as_str());
    }
    for name in p.parameter_usage().keys() {
        if !declared.contains(name.as_str()) {
            writeln!(out, "param {name};").unwrap();
        }
    }

    for v in &p.variables {
        write!(out, "var {}", v.name).unwrap();
        match v.domain {
            crate::ir::Domain::Continuous => {}
            crate::ir::Domain::Integer => out.push_str(" integer"),
            crate::ir::Domain::Binary => out.push_str(" binary"),
        }
        if v.domain != crate::ir::Domain::Binary {
            if v.lower != ExtRational::zero() {
                write!(out, " >= {}", v.lower).unwrap();
            }
            if v.upper != ExtRational::PosInf {
                write!(out, " <= {}", v.upper).unwrap();
            }
        }
        out.push_str(";\n");
    }

    let objective_name = p.objective.name.as_deref().unwrap_or("obj");
    writeln!(
        out,
        "{} {}: {};",
        p.objective.sense.as_str(),
        objective_name,
        p.objective.expr
    )
    .unwrap();

    let taken: BTreeSet<&str> = p.constraints.iter().filter_map(|c| c.name.as_deref()).collect();
    let mut counter = 0;
    for c in &p.constraints {
        let name = match &c.name {
            Some(n) => n.clone(),
            None => loop {
                counter += 1;
                let candidate = format!("c{counter}");
                if !taken.contains(candidate.as_str()) {
                    break candidate;
                }
            },
        };
        writeln!(
            out,
            "s.t. {name}: {} {} {};",
            c.lhs,
            c.sense.symbol(),
            format_rational(&c.rhs)
        )
        .unwrap();
    }
    Ok(SourceFile::generated(out))
}
