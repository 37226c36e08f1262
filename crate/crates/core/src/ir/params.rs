use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::{Coef, IrError, LinearExpr, ParamRef, ProblemIR};
use crate::rational::Rational;

/// A materialized parameter value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamValue {
    Scalar(Rational),
    Vector(Vec<Rational>),
    Table(Vec<Vec<Rational>>),
}

impl ParamValue {
    fn arity(&self) -> usize {
        match self {
            ParamValue::Scalar(_) => 0,
            ParamValue::Vector(_) => 1,
            ParamValue::Table(_) => 2,
        }
    }

    fn get(&self, index: &[usize]) -> Option<&Rational> {
        match (self, index) {
            (ParamValue::Scalar(v), []) => Some(v),
            (ParamValue::Vector(v), [i]) => v.get(i.checked_sub(1)?),
            (ParamValue::Table(t), [r, c]) => t.get(r.checked_sub(1)?)?.get(c.checked_sub(1)?),
            _ => None,
        }
    }

    /// Every numeric entry, in row-major order.
    pub fn entries(&self) -> Vec<&Rational> {
        match self {
            ParamValue::Scalar(v) => vec![v],
            ParamValue::Vector(v) => v.iter().collect(),
            ParamValue::Table(t) => t.iter().flatten().collect(),
        }
    }
}

/// Replaces every parameter reference with its value.
///
/// Values come from `values` first, then from inline bindings of `p`.
/// Shapes must agree with usage: scalars are referenced without an index,
/// vectors with one index covering exactly `1..=len`, tables with two
/// in-range indices. The input is left untouched.
pub fn substitute_parameters(
    p: &ProblemIR,
    values: &BTreeMap<String, ParamValue>,
) -> Result<ProblemIR, IrError> {
    let usage = p.parameter_usage();
    let mut resolved: BTreeMap<&str, ParamValue> = BTreeMap::new();
    for (name, shapes) in &usage {
        let value = match values.get(name) {
            Some(v) => v.clone(),
            None => p
                .binding(name)
                .and_then(|b| b.inline_value())
                .ok_or_else(|| IrError::MissingParameter(name.clone()))?,
        };
        check_shape(name, shapes, &value)?;
        resolved.insert(name, value);
    }

    let lookup = |r: &ParamRef| -> Rational {
        resolved[r.name.as_str()]
            .get(&r.index)
            .cloned()
            .expect("shape checked")
    };

    let mut out = p.clone();
    resolve_expr(&mut out.objective.expr, &lookup);
    for c in &mut out.constraints {
        resolve_expr(&mut c.lhs, &lookup);
        let shift = c.lhs.constant().clone();
        c.rhs -= shift;
        c.lhs.set_constant(Rational::zero());
    }
    out.bindings.retain(|b| !resolved.contains_key(b.parameter.as_str()));
    Ok(out)
}

fn check_shape(
    name: &str,
    shapes: &BTreeSet<Vec<usize>>,
    value: &ParamValue,
) -> Result<(), IrError> {
    let mismatch = |detail: String| IrError::DimensionMismatch {
        parameter: name.to_string(),
        detail,
    };
    for index in shapes {
        if index.len() != value.arity() {
            return Err(mismatch(format!(
                "referenced with {} index(es) but bound to a value of arity {}",
                index.len(),
                value.arity()
            )));
        }
        if value.get(index).is_none() {
            let idx: Vec<String> = index.iter().map(|i| i.to_string()).collect();
            return Err(mismatch(format!("index [{}] out of range", idx.join(","))));
        }
    }
    if let ParamValue::Vector(v) = value {
        if shapes.len() != v.len() {
            return Err(mismatch(format!(
                "vector of length {} used at {} position(s)",
                v.len(),
                shapes.len()
            )));
        }
    }
    Ok(())
}

fn resolve_expr(expr: &mut LinearExpr, lookup: &dyn Fn(&ParamRef) -> Rational) {
    for (param, factor) in expr.take_params() {
        let v = lookup(&param) * factor;
        expr.add_constant(&v);
    }
    let terms = expr.terms_mut();
    let symbolic: Vec<String> = terms
        .iter()
        .filter(|(_, c)| c.as_num().is_none())
        .map(|(n, _)| n.clone())
        .collect();
    for name in symbolic {
        if let Some(Coef::Param { scale, param }) = terms.remove(&name) {
            let v = scale * lookup(&param);
            if !v.is_zero() {
                terms.insert(name, Coef::Num(v));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::*;
    use crate::rational::int;

    fn capacity_problem() -> ProblemIR {
        ProblemIR::new(
            vec![VariableDecl::continuous("x")],
            Objective::maximize(LinearExpr::new().term("x", int(1))),
        )
        .constraint(Constraint::new(
            LinearExpr::new().term("x", int(1)).with_param(ParamRef::scalar("C"), int(-1)),
            Sense::Le,
            int(0),
        ))
    }

    #[test]
    fn scalar_substitution() {
        let p = capacity_problem();
        let values = BTreeMap::from([("C".to_string(), ParamValue::Scalar(int(40)))]);
        let q = substitute_parameters(&p, &values).unwrap();
        let c = &q.constraints[0];
        assert!(c.lhs.is_numeric());
        assert_eq!(c.lhs.coef("x"), Some(&Coef::Num(int(1))));
        assert!(c.lhs.constant().is_zero());
        assert_eq!(c.rhs, int(40));
        // input untouched
        assert!(!p.is_numeric());
    }

    #[test]
    fn missing_parameter() {
        assert_eq!(
            substitute_parameters(&capacity_problem(), &BTreeMap::new()),
            Err(IrError::MissingParameter("C".into()))
        );
    }

    #[test]
    fn inline_binding_is_used() {
        let mut p = capacity_problem();
        p.bindings.push(DataBinding {
            parameter: "C".into(),
            source: BindingSource::Scalar(int(7)),
        });
        let q = substitute_parameters(&p, &BTreeMap::new()).unwrap();
        assert_eq!(q.constraints[0].rhs, int(7));
        assert!(q.bindings.is_empty());
    }

    fn cost_vector_problem() -> ProblemIR {
        let mut obj = LinearExpr::new();
        obj.set_coef("x", "c[1]".parse().unwrap());
        obj.set_coef("y", "c[2]".parse().unwrap());
        ProblemIR::new(
            vec![VariableDecl::continuous("x"), VariableDecl::continuous("y")],
            Objective::minimize(obj),
        )
    }

    #[test]
    fn vector_coefficients() {
        let values = BTreeMap::from([(
            "c".to_string(),
            ParamValue::Vector(vec![int(4), int(5)]),
        )]);
        let q = substitute_parameters(&cost_vector_problem(), &values).unwrap();
        assert_eq!(q.objective.expr.coef("y"), Some(&Coef::Num(int(5))));
    }

    #[test]
    fn vector_length_must_match_usage() {
        let values = BTreeMap::from([(
            "c".to_string(),
            ParamValue::Vector(vec![int(1), int(2), int(3)]),
        )]);
        assert!(matches!(
            substitute_parameters(&cost_vector_problem(), &values),
            Err(IrError::DimensionMismatch { parameter, .. }) if parameter == "c"
        ));
    }

    #[test]
    fn scalar_used_as_vector_is_a_mismatch() {
        let values = BTreeMap::from([("c".to_string(), ParamValue::Scalar(int(1)))]);
        assert!(matches!(
            substitute_parameters(&cost_vector_problem(), &values),
            Err(IrError::DimensionMismatch { .. })
        ));
    }
}
