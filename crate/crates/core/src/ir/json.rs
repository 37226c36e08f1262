//! JSON encoding of [`ProblemIR`].
//!
//! ```json
//! {
//!   "variables":   [{"name": "x", "domain": "integer", "lower": 0, "upper": "inf"}],
//!   "objective":   {"sense": "maximize", "terms": {"x": 3}, "constant": 0},
//!   "constraints": [{"name": "c1", "terms": {"x": 1}, "params": {"C": -1}, "sense": "<=", "rhs": 0}],
//!   "bindings":    [{"parameter": "C", "source": {"kind": "file", "path": "cap.csv", "column": "cap", "row": 1}}],
//!   "metadata":    {}
//! }
//! ```
//!
//! Numbers may be JSON numbers or strings (`"1/3"`); a coefficient may also
//! be a parameter reference such as `"c[2]"` or `"-2*c[2]"`. When decoding,
//! unnamed variables are named `x1, x2, ...` by position and `terms` may be
//! given as an array aligned with the variable list.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::{
    BindingSource, Coef, Constraint, DataBinding, Domain, LinearExpr, Objective, ObjectiveSense,
    ParamRef, ProblemIR, Selector, Sense, VariableDecl,
};
use crate::rational::{rational_from_json, rational_to_json, ExtRational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

fn err(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.to_string(),
        message: message.into(),
    }
}

pub(super) fn problem_to_json(p: &ProblemIR) -> Value {
    let variables: Vec<Value> = p
        .variables
        .iter()
        .map(|v| {
            json!({
                "name": v.name,
                "domain": v.domain.as_str(),
                "lower": v.lower.to_json(),
                "upper": v.upper.to_json(),
            })
        })
        .collect();
    let mut objective = expr_to_json(&p.objective.expr);
    objective.insert("sense".into(), p.objective.sense.as_str().into());
    if let Some(name) = &p.objective.name {
        objective.insert("name".into(), name.clone().into());
    }
    let constraints: Vec<Value> = p
        .constraints
        .iter()
        .map(|c| {
            let mut m = expr_to_json(&c.lhs);
            if let Some(name) = &c.name {
                m.insert("name".into(), name.clone().into());
            }
            m.insert("sense".into(), c.sense.symbol().into());
            m.insert("rhs".into(), rational_to_json(&c.rhs));
            Value::Object(m)
        })
        .collect();
    let bindings: Vec<Value> = p.bindings.iter().map(binding_to_json).collect();
    json!({
        "variables": variables,
        "objective": Value::Object(objective),
        "constraints": constraints,
        "bindings": bindings,
        "metadata": p.metadata,
    })
}

fn expr_to_json(e: &LinearExpr) -> Map<String, Value> {
    let mut m = Map::new();
    let terms: Map<String, Value> = e
        .terms()
        .map(|(name, coef)| {
            let v = match coef {
                Coef::Num(v) => rational_to_json(v),
                param => Value::String(param.to_string()),
            };
            (name.to_string(), v)
        })
        .collect();
    m.insert("terms".into(), Value::Object(terms));
    let params: Map<String, Value> = e
        .params()
        .map(|(p, k)| (p.to_string(), rational_to_json(k)))
        .collect();
    if !params.is_empty() {
        m.insert("params".into(), Value::Object(params));
    }
    m.insert("constant".into(), rational_to_json(e.constant()));
    m
}

fn binding_to_json(b: &DataBinding) -> Value {
    let source = match &b.source {
        BindingSource::Scalar(v) => json!({"kind": "scalar", "value": rational_to_json(v)}),
        BindingSource::Vector(v) => {
            json!({"kind": "vector", "values": v.iter().map(rational_to_json).collect::<Vec<_>>()})
        }
        BindingSource::Table(t) => json!({
            "kind": "table",
            "rows": t.iter().map(|r| r.iter().map(rational_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
        BindingSource::File { path, selector } => match selector {
            Selector::Column(column) => json!({"kind": "file", "path": path, "column": column}),
            Selector::Cell { column, row } => {
                json!({"kind": "file", "path": path, "column": column, "row": row})
            }
        },
    };
    json!({"parameter": b.parameter, "source": source})
}

pub(super) fn problem_from_json(value: &Value) -> Result<ProblemIR, SchemaError> {
    let root = value.as_object().ok_or_else(|| err("$", "expected an object"))?;

    let raw_vars = match root.get("variables") {
        Some(Value::Array(a)) => a.as_slice(),
        Some(_) => return Err(err("variables", "expected an array")),
        None => return Err(err("variables", "missing")),
    };
    let variables = decode_variables(raw_vars)?;
    let order: Vec<&str> = variables.iter().map(|v| v.name.as_str()).collect();

    let obj = root
        .get("objective")
        .and_then(Value::as_object)
        .ok_or_else(|| err("objective", "missing or not an object"))?;
    let sense = match obj.get("sense").and_then(Value::as_str).map(str::to_ascii_lowercase) {
        Some(s) if s.starts_with("max") => ObjectiveSense::Maximize,
        Some(s) if s.starts_with("min") => ObjectiveSense::Minimize,
        Some(s) => return Err(err("objective.sense", format!("unknown sense {s:?}"))),
        None => return Err(err("objective.sense", "missing")),
    };
    let objective = Objective {
        sense,
        name: optional_string(obj, "name", "objective.name")?,
        expr: decode_expr(obj, &order, "objective")?,
    };

    let mut constraints = Vec::new();
    if let Some(raw) = root.get("constraints") {
        let raw = raw
            .as_array()
            .ok_or_else(|| err("constraints", "expected an array"))?;
        for (i, c) in raw.iter().enumerate() {
            let path = format!("constraints[{i}]");
            let c = c
                .as_object()
                .ok_or_else(|| err(&path, "expected an object"))?;
            let sense = c
                .get("sense")
                .and_then(Value::as_str)
                .and_then(Sense::from_symbol)
                .ok_or_else(|| err(&format!("{path}.sense"), "missing or unknown sense"))?;
            let rhs = match c.get("rhs") {
                Some(v) => rational_from_json(v).map_err(|m| err(&format!("{path}.rhs"), m))?,
                None => Rational::default(),
            };
            constraints.push(Constraint {
                name: optional_string(c, "name", &format!("{path}.name"))?,
                lhs: decode_expr(c, &order, &path)?,
                sense,
                rhs,
            });
        }
    }

    let mut bindings = Vec::new();
    if let Some(raw) = root.get("bindings") {
        let raw = raw
            .as_array()
            .ok_or_else(|| err("bindings", "expected an array"))?;
        for (i, b) in raw.iter().enumerate() {
            bindings.push(decode_binding(b, &format!("bindings[{i}]"))?);
        }
    }

    let mut metadata = BTreeMap::new();
    if let Some(raw) = root.get("metadata") {
        let raw = raw
            .as_object()
            .ok_or_else(|| err("metadata", "expected an object"))?;
        for (k, v) in raw {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            metadata.insert(k.clone(), text);
        }
    }

    Ok(ProblemIR {
        variables,
        objective,
        constraints,
        bindings,
        metadata,
    })
}

fn decode_variables(raw: &[Value]) -> Result<Vec<VariableDecl>, SchemaError> {
    let explicit: Vec<Option<String>> = raw
        .iter()
        .map(|v| v.get("name").and_then(Value::as_str).map(str::to_string))
        .collect();
    let taken: std::collections::BTreeSet<&str> =
        explicit.iter().flatten().map(String::as_str).collect();
    let mut next_auto = 1;
    let mut out = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        let path = format!("variables[{i}]");
        let obj = v.as_object().ok_or_else(|| err(&path, "expected an object"))?;
        let name = match &explicit[i] {
            Some(n) => n.clone(),
            None => loop {
                let candidate = format!("x{next_auto}");
                next_auto += 1;
                if !taken.contains(candidate.as_str()) {
                    break candidate;
                }
            },
        };
        let domain_text = obj
            .get("domain")
            .or_else(|| obj.get("type"))
            .and_then(Value::as_str)
            .map(str::to_ascii_lowercase);
        let domain = match domain_text.as_deref() {
            None | Some("continuous") | Some("real") => Domain::Continuous,
            Some("integer") | Some("int") => Domain::Integer,
            Some("binary") | Some("bool") => Domain::Binary,
            Some(other) => {
                return Err(err(&format!("{path}.domain"), format!("unknown domain {other:?}")))
            }
        };
        let mut decl = VariableDecl::with_domain(name, domain);
        if let Some(lower) = obj.get("lower").filter(|v| !v.is_null()) {
            decl.lower = ExtRational::from_json(lower).map_err(|m| err(&format!("{path}.lower"), m))?;
        }
        if let Some(upper) = obj.get("upper").filter(|v| !v.is_null()) {
            decl.upper = ExtRational::from_json(upper).map_err(|m| err(&format!("{path}.upper"), m))?;
        }
        out.push(decl);
    }
    Ok(out)
}

fn optional_string(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Option<String>, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(err(path, "expected a string")),
    }
}

fn decode_expr(
    obj: &Map<String, Value>,
    order: &[&str],
    path: &str,
) -> Result<LinearExpr, SchemaError> {
    let mut e = LinearExpr::new();
    match obj.get("terms") {
        None | Some(Value::Null) => {}
        Some(Value::Object(terms)) => {
            for (name, v) in terms {
                let coef = decode_coef(v).map_err(|m| err(&format!("{path}.terms.{name}"), m))?;
                add_coef(&mut e, name, coef);
            }
        }
        Some(Value::Array(coefs)) => {
            if coefs.len() != order.len() {
                return Err(err(
                    &format!("{path}.terms"),
                    format!("{} coefficients for {} variables", coefs.len(), order.len()),
                ));
            }
            for (name, v) in order.iter().zip(coefs) {
                let coef = decode_coef(v).map_err(|m| err(&format!("{path}.terms.{name}"), m))?;
                add_coef(&mut e, name, coef);
            }
        }
        Some(_) => return Err(err(&format!("{path}.terms"), "expected an object or array")),
    }
    if let Some(params) = obj.get("params").filter(|v| !v.is_null()) {
        let params = params
            .as_object()
            .ok_or_else(|| err(&format!("{path}.params"), "expected an object"))?;
        for (key, v) in params {
            let param: ParamRef = key.parse().map_err(|m| err(&format!("{path}.params"), m))?;
            let k = rational_from_json(v).map_err(|m| err(&format!("{path}.params.{key}"), m))?;
            e.add_param(param, k);
        }
    }
    if let Some(c) = obj.get("constant").filter(|v| !v.is_null()) {
        let c = rational_from_json(c).map_err(|m| err(&format!("{path}.constant"), m))?;
        e.set_constant(c);
    }
    Ok(e)
}

fn decode_coef(v: &Value) -> Result<Coef, String> {
    match v {
        Value::String(s) => s.parse(),
        other => rational_from_json(other).map(Coef::Num),
    }
}

fn add_coef(e: &mut LinearExpr, name: &str, coef: Coef) {
    match coef {
        Coef::Num(v) => e.add_term(name, v),
        param => e.set_coef(name, param),
    }
}

fn decode_binding(v: &Value, path: &str) -> Result<DataBinding, SchemaError> {
    let obj = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    let parameter = obj
        .get("parameter")
        .and_then(Value::as_str)
        .ok_or_else(|| err(&format!("{path}.parameter"), "missing"))?
        .to_string();
    let src = obj
        .get("source")
        .and_then(Value::as_object)
        .ok_or_else(|| err(&format!("{path}.source"), "missing or not an object"))?;
    let spath = format!("{path}.source");
    let numbers = |key: &str| -> Result<Vec<Rational>, SchemaError> {
        src.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| err(&format!("{spath}.{key}"), "expected an array"))?
            .iter()
            .map(|x| rational_from_json(x).map_err(|m| err(&format!("{spath}.{key}"), m)))
            .collect()
    };
    let source = match src.get("kind").and_then(Value::as_str) {
        Some("scalar") => BindingSource::Scalar(
            rational_from_json(src.get("value").unwrap_or(&Value::Null))
                .map_err(|m| err(&format!("{spath}.value"), m))?,
        ),
        Some("vector") => BindingSource::Vector(numbers("values")?),
        Some("table") => {
            let rows = src
                .get("rows")
                .and_then(Value::as_array)
                .ok_or_else(|| err(&format!("{spath}.rows"), "expected an array"))?;
            let rows = rows
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| err(&format!("{spath}.rows"), "expected nested arrays"))?
                        .iter()
                        .map(|x| rational_from_json(x).map_err(|m| err(&format!("{spath}.rows"), m)))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            BindingSource::Table(rows)
        }
        Some("file") => {
            let path_value = src
                .get("path")
                .and_then(Value::as_str)
                .ok_or_else(|| err(&format!("{spath}.path"), "missing"))?
                .to_string();
            let column = src
                .get("column")
                .and_then(Value::as_str)
                .ok_or_else(|| err(&format!("{spath}.column"), "missing"))?
                .to_string();
            let selector = match src.get("row") {
                None | Some(Value::Null) => Selector::Column(column),
                Some(r) => Selector::Cell {
                    column,
                    row: r
                        .as_u64()
                        .filter(|r| *r >= 1)
                        .ok_or_else(|| err(&format!("{spath}.row"), "expected a positive integer"))?
                        as usize,
                },
            };
            BindingSource::File {
                path: path_value,
                selector,
            }
        }
        other => return Err(err(&format!("{spath}.kind"), format!("unknown kind {other:?}"))),
    };
    Ok(DataBinding { parameter, source })
}
