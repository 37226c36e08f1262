use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{is_identifier, Domain, LinearExpr, ProblemIR, RESERVED_WORDS};
use crate::rational::ExtRational;

/// Which expression of a problem a violation points at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    Objective,
    Constraint { index: usize, name: Option<String> },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Objective => f.write_str("objective"),
            Location::Constraint { name: Some(n), .. } => write!(f, "constraint {n}"),
            Location::Constraint { index, .. } => write!(f, "constraint #{}", index + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "code")]
pub enum Violation {
    NoVariables,
    InvalidName { name: String },
    DuplicateVariable { name: String },
    UndeclaredVariable { name: String, location: Location },
    InvertedBounds { name: String },
    InfiniteBound { name: String },
    BinaryBounds { name: String },
    ZeroCoefficient { name: String, location: Location },
    DuplicateConstraintName { name: String },
    DuplicateBinding { parameter: String },
    ParameterShadowsVariable { name: String },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NoVariables => "NoVariables",
            Violation::InvalidName { .. } => "InvalidName",
            Violation::DuplicateVariable { .. } => "DuplicateVariable",
            Violation::UndeclaredVariable { .. } => "UndeclaredVariable",
            Violation::InvertedBounds { .. } => "InvertedBounds",
            Violation::InfiniteBound { .. } => "InfiniteBound",
            Violation::BinaryBounds { .. } => "BinaryBounds",
            Violation::ZeroCoefficient { .. } => "ZeroCoefficient",
            Violation::DuplicateConstraintName { .. } => "DuplicateConstraintName",
            Violation::DuplicateBinding { .. } => "DuplicateBinding",
            Violation::ParameterShadowsVariable { .. } => "ParameterShadowsVariable",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVariables => f.write_str("no variables declared"),
            Violation::InvalidName { name } => write!(f, "invalid name {name:?}"),
            Violation::DuplicateVariable { name } => write!(f, "variable {name} declared twice"),
            Violation::UndeclaredVariable { name, location } => {
                write!(f, "undeclared variable {name} in {location}")
            }
            Violation::InvertedBounds { name } => {
                write!(f, "lower bound of {name} exceeds its upper bound")
            }
            Violation::InfiniteBound { name } => {
                write!(f, "bound of {name} is infinite on the wrong side")
            }
            Violation::BinaryBounds { name } => {
                write!(f, "binary variable {name} must have bounds [0, 1]")
            }
            Violation::ZeroCoefficient { name, location } => {
                write!(f, "zero coefficient stored for {name} in {location}")
            }
            Violation::DuplicateConstraintName { name } => {
                write!(f, "constraint name {name} used twice")
            }
            Violation::DuplicateBinding { parameter } => {
                write!(f, "parameter {parameter} bound more than once")
            }
            Violation::ParameterShadowsVariable { name } => {
                write!(f, "parameter {name} has the same name as a variable")
            }
        }
    }
}

/// Checks every structural invariant of a formulation. Violations are data;
/// an empty list means the problem is well formed.
pub fn validate(p: &ProblemIR) -> Vec<Violation> {
    let mut out = Vec::new();
    if p.variables.is_empty() {
        out.push(Violation::NoVariables);
    }

    let mut declared = BTreeSet::new();
    for v in &p.variables {
        if !is_name(&v.name) {
            out.push(Violation::InvalidName {
                name: v.name.clone(),
            });
        }
        if !declared.insert(v.name.as_str()) {
            out.push(Violation::DuplicateVariable {
                name: v.name.clone(),
            });
        }
        if v.lower == ExtRational::PosInf || v.upper == ExtRational::NegInf {
            out.push(Violation::InfiniteBound {
                name: v.name.clone(),
            });
        } else if v.lower > v.upper {
            out.push(Violation::InvertedBounds {
                name: v.name.clone(),
            });
        }
        if v.domain == Domain::Binary
            && (v.lower != ExtRational::zero()
                || v.upper != ExtRational::Finite(num_traits::One::one()))
        {
            out.push(Violation::BinaryBounds {
                name: v.name.clone(),
            });
        }
    }

    check_expr(&p.objective.expr, &declared, Location::Objective, &mut out);
    let mut names = BTreeSet::new();
    for (index, c) in p.constraints.iter().enumerate() {
        let location = Location::Constraint {
            index,
            name: c.name.clone(),
        };
        if let Some(name) = &c.name {
            if !is_identifier(name) {
                out.push(Violation::InvalidName { name: name.clone() });
            }
            if !names.insert(name.as_str()) {
                out.push(Violation::DuplicateConstraintName { name: name.clone() });
            }
        }
        check_expr(&c.lhs, &declared, location, &mut out);
    }
    if let Some(name) = &p.objective.name {
        if !is_identifier(name) {
            out.push(Violation::InvalidName { name: name.clone() });
        }
    }

    let mut bound = BTreeSet::new();
    for b in &p.bindings {
        if !is_name(&b.parameter) {
            out.push(Violation::InvalidName {
                name: b.parameter.clone(),
            });
        }
        if !bound.insert(b.parameter.as_str()) {
            out.push(Violation::DuplicateBinding {
                parameter: b.parameter.clone(),
            });
        }
    }
    let mut shadowed = BTreeSet::new();
    for name in p
        .parameter_usage()
        .keys()
        .map(String::as_str)
        .chain(bound.iter().copied())
    {
        if declared.contains(name) && shadowed.insert(name) {
            out.push(Violation::ParameterShadowsVariable {
                name: name.to_string(),
            });
        }
    }
    out
}

fn is_name(s: &str) -> bool {
    is_identifier(s) && !RESERVED_WORDS.contains(&s)
}

fn check_expr(
    expr: &LinearExpr,
    declared: &BTreeSet<&str>,
    location: Location,
    out: &mut Vec<Violation>,
) {
    for (name, coef) in expr.terms() {
        if !declared.contains(name) {
            out.push(Violation::UndeclaredVariable {
                name: name.to_string(),
                location: location.clone(),
            });
        }
        if coef.is_zero() {
            out.push(Violation::ZeroCoefficient {
                name: name.to_string(),
                location: location.clone(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::*;
    use crate::rational::int;

    fn sample() -> ProblemIR {
        ProblemIR::new(
            vec![VariableDecl::continuous("x"), VariableDecl::continuous("y")],
            Objective::maximize(LinearExpr::new().term("x", int(3)).term("y", int(2))),
        )
        .constraint(Constraint::new(
            LinearExpr::new().term("x", int(1)).term("y", int(1)),
            Sense::Le,
            int(4),
        ))
    }

    #[test]
    fn well_formed_problem_has_no_violations() {
        assert!(validate(&sample()).is_empty());
    }

    #[test]
    fn undeclared_variable_is_reported() {
        let p = sample().constraint(Constraint::new(
            LinearExpr::new().term("z", int(1)),
            Sense::Le,
            int(1),
        ));
        let v = validate(&p);
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::UndeclaredVariable { name, .. } if name == "z"));
    }

    #[test]
    fn duplicate_variable_is_reported() {
        let mut p = sample();
        p.variables.push(VariableDecl::integer("x"));
        assert_eq!(
            validate(&p),
            vec![Violation::DuplicateVariable { name: "x".into() }]
        );
    }

    #[test]
    fn bound_and_name_checks() {
        let mut p = sample();
        p.variables.push(
            VariableDecl::continuous("w").bounds(ExtRational::Finite(int(5)), int(1).into()),
        );
        p.variables
            .push(VariableDecl::binary("b").bounds(ExtRational::zero(), int(2).into()));
        p.variables.push(VariableDecl::continuous("integer"));
        p.variables.push(VariableDecl::continuous("u").bounds(ExtRational::PosInf, ExtRational::PosInf));
        let codes: Vec<_> = validate(&p).iter().map(Violation::code).collect();
        assert_eq!(
            codes,
            vec!["InvertedBounds", "BinaryBounds", "InvalidName", "InfiniteBound"]
        );
    }

    #[test]
    fn no_variables_and_duplicate_bindings() {
        let mut p = ProblemIR::new(vec![], Objective::minimize(LinearExpr::new()));
        p.bindings.push(DataBinding {
            parameter: "C".into(),
            source: BindingSource::Scalar(int(1)),
        });
        p.bindings.push(DataBinding {
            parameter: "C".into(),
            source: BindingSource::Scalar(int(2)),
        });
        let codes: Vec<_> = validate(&p).iter().map(Violation::code).collect();
        assert_eq!(codes, vec!["NoVariables", "DuplicateBinding"]);
    }

    #[test]
    fn parameter_may_not_share_a_variable_name() {
        let mut p = sample();
        p.constraints[0].lhs.add_param(ParamRef::scalar("x"), int(-1));
        assert_eq!(
            validate(&p),
            vec![Violation::ParameterShadowsVariable { name: "x".into() }]
        );
    }
}
