//! Deterministic normal form of a formulation.
//!
//! Two formulations are considered the same model exactly when their
//! canonical forms are structurally equal. The procedure moves variable
//! terms left and constants right, turns `>=`/`>` into `<=`/`<` by negation,
//! sorts terms, optionally rescales, and collects constraints as a sorted
//! multiset. Nothing is ever simplified away: a redundant constraint stays.

use serde::{Deserialize, Serialize};

use num_traits::{Signed, Zero};

use super::{
    ensure_valid, Constraint, Domain, IrError, LinearExpr, Objective, ObjectiveSense, ProblemIR,
    Sense, VariableDecl,
};
use crate::rational::{ExtRational, Rational};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquivalenceMode {
    /// Coefficients compared verbatim.
    #[default]
    Strict,
    /// Each row divided by the magnitude of its first coefficient before
    /// comparison; equalities are additionally made to lead with `+1`.
    Scaled,
}

impl std::str::FromStr for EquivalenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(EquivalenceMode::Strict),
            "scaled" => Ok(EquivalenceMode::Scaled),
            other => Err(format!("unknown equivalence mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonSense {
    Le,
    Lt,
    Eq,
}

impl CanonSense {
    fn to_sense(self) -> Sense {
        match self {
            CanonSense::Le => Sense::Le,
            CanonSense::Lt => Sense::Lt,
            CanonSense::Eq => Sense::Eq,
        }
    }
}

pub type Terms = Vec<(String, Rational)>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonVariable {
    pub name: String,
    pub domain: Domain,
    pub lower: ExtRational,
    pub upper: ExtRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonObjective {
    pub sense: ObjectiveSense,
    pub terms: Terms,
    pub constant: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonConstraint {
    pub terms: Terms,
    pub sense: CanonSense,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalForm {
    pub variables: Vec<CanonVariable>,
    pub objective: CanonObjective,
    /// Sorted; duplicates are kept.
    pub constraints: Vec<CanonConstraint>,
}

impl CanonicalForm {
    /// Rebuilds a plain formulation carrying exactly this canonical content.
    pub fn to_problem(&self) -> ProblemIR {
        let variables = self
            .variables
            .iter()
            .map(|v| VariableDecl {
                name: v.name.clone(),
                domain: v.domain,
                lower: v.lower.clone(),
                upper: v.upper.clone(),
            })
            .collect();
        let objective = Objective {
            sense: self.objective.sense,
            name: None,
            expr: expr_from_terms(&self.objective.terms)
                .with_constant(self.objective.constant.clone()),
        };
        let mut p = ProblemIR::new(variables, objective);
        p.constraints = self
            .constraints
            .iter()
            .map(|c| Constraint::new(expr_from_terms(&c.terms), c.sense.to_sense(), c.rhs.clone()))
            .collect();
        p
    }

    /// Applies a variable renaming and re-sorts everything that depends on
    /// names.
    pub fn renamed(&self, rename: &dyn Fn(&str) -> String) -> CanonicalForm {
        let mut variables: Vec<_> = self
            .variables
            .iter()
            .map(|v| CanonVariable {
                name: rename(&v.name),
                ..v.clone()
            })
            .collect();
        variables.sort();
        let rename_terms = |terms: &Terms| {
            let mut t: Terms = terms.iter().map(|(n, c)| (rename(n), c.clone())).collect();
            t.sort();
            t
        };
        let mut constraints: Vec<_> = self
            .constraints
            .iter()
            .map(|c| CanonConstraint {
                terms: rename_terms(&c.terms),
                sense: c.sense,
                rhs: c.rhs.clone(),
            })
            .collect();
        constraints.sort();
        CanonicalForm {
            variables,
            objective: CanonObjective {
                sense: self.objective.sense,
                terms: rename_terms(&self.objective.terms),
                constant: self.objective.constant.clone(),
            },
            constraints,
        }
    }
}

fn expr_from_terms(terms: &Terms) -> LinearExpr {
    let mut e = LinearExpr::new();
    for (name, coef) in terms {
        e.add_term(name.clone(), coef.clone());
    }
    e
}

pub fn canonicalize(p: &ProblemIR, mode: EquivalenceMode) -> Result<CanonicalForm, IrError> {
    ensure_valid(p)?;
    if !p.is_numeric() {
        let mut names: Vec<String> = p.parameter_usage().into_keys().collect();
        names.dedup();
        return Err(IrError::UnresolvedParameters(names));
    }

    let mut variables: Vec<CanonVariable> = p
        .variables
        .iter()
        .map(|v| CanonVariable {
            name: v.name.clone(),
            domain: v.domain,
            lower: v.lower.clone(),
            upper: v.upper.clone(),
        })
        .collect();
    variables.sort();

    let objective = CanonObjective {
        sense: p.objective.sense,
        terms: numeric_terms(&p.objective.expr),
        constant: p.objective.expr.constant().clone(),
    };

    let mut constraints: Vec<CanonConstraint> = p
        .constraints
        .iter()
        .map(|c| canonical_constraint(c, mode))
        .collect();
    constraints.sort();

    Ok(CanonicalForm {
        variables,
        objective,
        constraints,
    })
}

fn numeric_terms(expr: &LinearExpr) -> Terms {
    expr.numeric_terms()
        .expect("numeric expression")
        .into_iter()
        .map(|(n, c)| (n.to_string(), c.clone()))
        .collect()
}

fn canonical_constraint(c: &Constraint, mode: EquivalenceMode) -> CanonConstraint {
    let mut terms = numeric_terms(&c.lhs);
    let mut rhs = &c.rhs - c.lhs.constant();
    let sense = match c.sense {
        Sense::Le => CanonSense::Le,
        Sense::Lt => CanonSense::Lt,
        Sense::Eq => CanonSense::Eq,
        Sense::Ge | Sense::Gt => {
            for (_, coef) in terms.iter_mut() {
                *coef = -coef.clone();
            }
            rhs = -rhs;
            if c.sense == Sense::Ge {
                CanonSense::Le
            } else {
                CanonSense::Lt
            }
        }
    };
    if mode == EquivalenceMode::Scaled {
        if let Some((_, lead)) = terms.first() {
            let divisor = if sense == CanonSense::Eq {
                lead.clone()
            } else {
                lead.abs()
            };
            for (_, coef) in terms.iter_mut() {
                *coef = &*coef / &divisor;
            }
            rhs /= divisor;
        }
    }
    debug_assert!(terms.iter().all(|(_, c)| !c.is_zero()));
    CanonConstraint { terms, sense, rhs }
}
