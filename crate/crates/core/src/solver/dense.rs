use crate::ir::{ObjectiveSense, ProblemIR, Sense};
use crate::rational::to_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// binary64 view of a numeric, non-strict problem, always maximizing.
#[derive(Clone, Debug)]
pub(crate) struct DenseModel {
    pub names: Vec<String>,
    pub integer: Vec<bool>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl DenseModel {
    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Expects a validated, fully numeric problem without strict senses.
    pub fn from_problem(p: &ProblemIR) -> DenseModel {
        let names: Vec<String> = p.variables.iter().map(|v| v.name.clone()).collect();
        let index = |name: &str| names.iter().position(|n| n == name).expect("declared");
        let flip = if p.objective.sense == ObjectiveSense::Maximize { 1.0 } else { -1.0 };
        let mut objective = vec![0.0; names.len()];
        for (name, coef) in p.objective.expr.numeric_terms().expect("numeric objective") {
            objective[index(name)] = flip * to_f64(coef);
        }
        let rows = p
            .constraints
            .iter()
            .map(|c| {
                let coefs = c
                    .lhs
                    .numeric_terms()
                    .expect("numeric constraint")
                    .into_iter()
                    .map(|(name, coef)| (index(name), to_f64(coef)))
                    .collect();
                let sense = match c.sense {
                    Sense::Le => RowSense::Le,
                    Sense::Ge => RowSense::Ge,
                    Sense::Eq => RowSense::Eq,
                    Sense::Lt | Sense::Gt => panic!("strict sense must be strictified first"),
                };
                Row {
                    coefs,
                    sense,
                    rhs: to_f64(&(&c.rhs - c.lhs.constant())),
                }
            })
            .collect();
        DenseModel {
            integer: p.variables.iter().map(|v| v.domain.is_integral()).collect(),
            lower: p.variables.iter().map(|v| v.lower.to_f64()).collect(),
            upper: p.variables.iter().map(|v| v.upper.to_f64()).collect(),
            names,
            objective,
            rows,
        }
    }
}
