//! Export to the CPLEX LP text format, for cross-checking with other solvers.

use std::fmt::Write;

use thiserror::Error;

use crate::ir::{Domain, LinearExpr, ObjectiveSense, ProblemIR, Sense};
use crate::rational::{to_f64, ExtRational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpExportError {
    #[error("strict constraint {0} must be strictified before export")]
    StrictConstraint(String),
    #[error("problem still references data parameters")]
    Unresolved,
}

pub fn to_lp_format(p: &ProblemIR) -> Result<String, LpExportError> {
    if !p.is_numeric() {
        return Err(LpExportError::Unresolved);
    }
    let mut out = String::from("\\ exported by lpchat\n");
    out.push_str(match p.objective.sense {
        ObjectiveSense::Maximize => "Maximize\n",
        ObjectiveSense::Minimize => "Minimize\n",
    });
    let obj_name = p.objective.name.as_deref().unwrap_or("obj");
    writeln!(out, " {obj_name}: {}", lp_expr(&p.objective.expr)).unwrap();
    if !num_traits::Zero::is_zero(p.objective.expr.constant()) {
        writeln!(out, "\\ objective constant {}", to_f64(p.objective.expr.constant())).unwrap();
    }

    out.push_str("Subject To\n");
    for (i, c) in p.constraints.iter().enumerate() {
        let name = c.name.clone().unwrap_or_else(|| format!("r{}", i + 1));
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
            Sense::Lt | Sense::Gt => return Err(LpExportError::StrictConstraint(name)),
        };
        let rhs = to_f64(&(&c.rhs - c.lhs.constant()));
        writeln!(out, " {name}: {} {sense} {}", lp_expr(&c.lhs), rhs).unwrap();
    }

    out.push_str("Bounds\n");
    for v in &p.variables {
        if v.domain == Domain::Binary {
            continue;
        }
        match (&v.lower, &v.upper) {
            (ExtRational::NegInf, ExtRational::PosInf) => writeln!(out, " {} free", v.name),
            (l, ExtRational::PosInf) if *l == ExtRational::zero() => continue,
            (l, ExtRational::PosInf) => writeln!(out, " {} >= {}", v.name, l.to_f64()),
            (ExtRational::NegInf, u) => writeln!(out, " -inf <= {} <= {}", v.name, u.to_f64()),
            (l, u) => writeln!(out, " {} <= {} <= {}", l.to_f64(), v.name, u.to_f64()),
        }
        .unwrap();
    }
    let section = |out: &mut String, title: &str, domain: Domain| {
        let names: Vec<&str> = p
            .variables
            .iter()
            .filter(|v| v.domain == domain)
            .map(|v| v.name.as_str())
            .collect();
        if !names.is_empty() {
            writeln!(out, "{title}\n {}", names.join(" ")).unwrap();
        }
    };
    section(&mut out, "General", Domain::Integer);
    section(&mut out, "Binary", Domain::Binary);
    out.push_str("End\n");
    Ok(out)
}

fn lp_expr(e: &LinearExpr) -> String {
    let terms = e.numeric_terms().unwrap_or_default();
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (name, coef)) in terms.iter().enumerate() {
        let v = to_f64(coef);
        let sign = if v < 0.0 { "-" } else { "+" };
        if i == 0 {
            if v < 0.0 {
                out.push_str("- ");
            }
        } else {
            write!(out, " {sign} ").unwrap();
        }
        write!(out, "{} {name}", v.abs()).unwrap();
    }
    out
}
