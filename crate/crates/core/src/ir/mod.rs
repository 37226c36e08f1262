//! Typed LP/MILP formulations.
//!
//! A [`ProblemIR`] is what the formulation stage produces, what the MiniAPL
//! printer renders, what the solver consumes and what the accuracy metric
//! compares (through [`canonical::canonicalize`]).

pub mod canonical;
mod json;
mod params;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{format_rational, parse_rational, ExtRational, Rational};

pub use canonical::{
    canonicalize, CanonConstraint, CanonObjective, CanonSense, CanonVariable, CanonicalForm,
    EquivalenceMode, Terms,
};
pub use json::SchemaError;
pub use params::{substitute_parameters, ParamValue};
pub use validate::{validate, Location, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Continuous,
    Integer,
    Binary,
}

impl Domain {
    pub fn is_integral(self) -> bool {
        !matches!(self, Domain::Continuous)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Continuous => "continuous",
            Domain::Integer => "integer",
            Domain::Binary => "binary",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub domain: Domain,
    pub lower: ExtRational,
    pub upper: ExtRational,
}

impl VariableDecl {
    /// Continuous variable with the default bounds `[0, +inf)`.
    pub fn continuous(name: impl Into<String>) -> Self {
        Self::with_domain(name, Domain::Continuous)
    }

    pub fn integer(name: impl Into<String>) -> Self {
        Self::with_domain(name, Domain::Integer)
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::with_domain(name, Domain::Binary)
    }

    pub fn with_domain(name: impl Into<String>, domain: Domain) -> Self {
        let upper = match domain {
            Domain::Binary => ExtRational::Finite(Rational::one()),
            _ => ExtRational::PosInf,
        };
        VariableDecl {
            name: name.into(),
            domain,
            lower: ExtRational::zero(),
            upper,
        }
    }

    pub fn bounds(mut self, lower: ExtRational, upper: ExtRational) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }
}

/// Reference to a data parameter, optionally indexed (1-based): `C`, `c[2]`,
/// `T[1,3]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamRef {
    pub name: String,
    pub index: Vec<usize>,
}

impl ParamRef {
    pub fn scalar(name: impl Into<String>) -> Self {
        ParamRef {
            name: name.into(),
            index: Vec::new(),
        }
    }

    pub fn indexed(name: impl Into<String>, index: Vec<usize>) -> Self {
        ParamRef {
            name: name.into(),
            index,
        }
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.index.is_empty() {
            let idx: Vec<String> = self.index.iter().map(|i| i.to_string()).collect();
            write!(f, "[{}]", idx.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for ParamRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, index) = match s.split_once('[') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(']')
                    .ok_or_else(|| format!("unterminated index in {s:?}"))?;
                let index = inner
                    .split(',')
                    .map(|p| match p.trim().parse::<usize>() {
                        Ok(i) if i >= 1 => Ok(i),
                        _ => Err(format!("invalid index {p:?} in {s:?}")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (name.trim(), index)
            }
            None => (s, Vec::new()),
        };
        if !is_identifier(name) {
            return Err(format!("invalid parameter name {name:?}"));
        }
        Ok(ParamRef::indexed(name, index))
    }
}

/// Coefficient of a variable term: a number, or a scaled data parameter that
/// `substitute_parameters` resolves later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coef {
    Num(Rational),
    Param { scale: Rational, param: ParamRef },
}

impl Coef {
    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Coef::Num(v) => Some(v),
            Coef::Param { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coef::Num(v) => v.is_zero(),
            Coef::Param { scale, .. } => scale.is_zero(),
        }
    }

    pub fn scaled(&self, factor: &Rational) -> Coef {
        match self {
            Coef::Num(v) => Coef::Num(v * factor),
            Coef::Param { scale, param } => Coef::Param {
                scale: scale * factor,
                param: param.clone(),
            },
        }
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Num(v) => f.write_str(&format_rational(v)),
            Coef::Param { scale, param } if scale.is_one() => write!(f, "{param}"),
            Coef::Param { scale, param } if *scale == -Rational::one() => write!(f, "-{param}"),
            Coef::Param { scale, param } => write!(f, "{}*{param}", format_rational(scale)),
        }
    }
}

impl FromStr for Coef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(v) = parse_rational(s) {
            return Ok(Coef::Num(v));
        }
        if let Some((scale, param)) = s.split_once('*') {
            let scale =
                parse_rational(scale).ok_or_else(|| format!("invalid coefficient {s:?}"))?;
            return Ok(Coef::Param {
                scale,
                param: param.parse()?,
            });
        }
        let (scale, rest) = match s.strip_prefix('-') {
            Some(rest) => (-Rational::one(), rest),
            None => (Rational::one(), s),
        };
        Ok(Coef::Param {
            scale,
            param: rest.parse()?,
        })
    }
}

/// Linear expression `sum(coef * var) + sum(k * param) + constant`.
///
/// Terms are kept sorted by variable name and never store a zero
/// coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearExpr {
    terms: BTreeMap<String, Coef>,
    params: BTreeMap<ParamRef, Rational>,
    constant: Rational,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant_only(constant: Rational) -> Self {
        LinearExpr {
            constant,
            ..Self::default()
        }
    }

    /// Builder form of [`LinearExpr::add_term`].
    pub fn term(mut self, name: impl Into<String>, coef: Rational) -> Self {
        self.add_term(name, coef);
        self
    }

    pub fn with_constant(mut self, constant: Rational) -> Self {
        self.constant = constant;
        self
    }

    pub fn with_param(mut self, param: ParamRef, factor: Rational) -> Self {
        self.add_param(param, factor);
        self
    }

    /// Adds `coef * name`, merging with an existing numeric term.
    ///
    /// Panics if `name` already carries a symbolic coefficient.
    pub fn add_term(&mut self, name: impl Into<String>, coef: Rational) {
        let name = name.into();
        let merged = match self.terms.remove(&name) {
            Some(Coef::Num(existing)) => Coef::Num(existing + coef),
            Some(param @ Coef::Param { .. }) => {
                assert!(coef.is_zero(), "cannot add a number to symbolic coefficient of {name}");
                param
            }
            None => Coef::Num(coef),
        };
        if !merged.is_zero() {
            self.terms.insert(name, merged);
        }
    }

    pub fn set_coef(&mut self, name: impl Into<String>, coef: Coef) {
        let name = name.into();
        if coef.is_zero() {
            self.terms.remove(&name);
        } else {
            self.terms.insert(name, coef);
        }
    }

    pub fn add_param(&mut self, param: ParamRef, factor: Rational) {
        let merged = self.params.remove(&param).unwrap_or_default() + factor;
        if !merged.is_zero() {
            self.params.insert(param, merged);
        }
    }

    pub fn add_constant(&mut self, value: &Rational) {
        self.constant += value;
    }

    pub fn set_constant(&mut self, value: Rational) {
        self.constant = value;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &Coef)> {
        self.terms.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn coef(&self, name: &str) -> Option<&Coef> {
        self.terms.get(name)
    }

    pub fn params(&self) -> impl Iterator<Item = (&ParamRef, &Rational)> {
        self.params.iter()
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no coefficient or additive term refers to a parameter.
    pub fn is_numeric(&self) -> bool {
        self.params.is_empty() && self.terms.values().all(|c| c.as_num().is_some())
    }

    /// Numeric terms; `None` if any coefficient is still symbolic.
    pub fn numeric_terms(&self) -> Option<Vec<(&str, &Rational)>> {
        self.terms
            .iter()
            .map(|(k, c)| c.as_num().map(|v| (k.as_str(), v)))
            .collect()
    }

    pub fn scaled(&self, factor: &Rational) -> LinearExpr {
        let mut out = LinearExpr::new();
        if factor.is_zero() {
            return out;
        }
        for (name, coef) in &self.terms {
            out.terms.insert(name.clone(), coef.scaled(factor));
        }
        for (param, k) in &self.params {
            out.params.insert(param.clone(), k * factor);
        }
        out.constant = &self.constant * factor;
        out
    }

    pub fn param_refs(&self) -> impl Iterator<Item = &ParamRef> {
        self.params.keys().chain(self.terms.values().filter_map(|c| match c {
            Coef::Param { param, .. } => Some(param),
            Coef::Num(_) => None,
        }))
    }

    pub(crate) fn terms_mut(&mut self) -> &mut BTreeMap<String, Coef> {
        &mut self.terms
    }

    pub(crate) fn take_params(&mut self) -> BTreeMap<ParamRef, Rational> {
        std::mem::take(&mut self.params)
    }
}

/// Renders as MiniAPL-style text: `2*x - y + C - 3`. Symbolic
/// coefficients appear as `c[1]*x`.
impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<(Rational, String)> = Vec::new();
        for (name, coef) in &self.terms {
            match coef {
                Coef::Num(v) => items.push((v.clone(), name.clone())),
                Coef::Param { scale, param } => items.push((scale.clone(), format!("{param}*{name}"))),
            }
        }
        for (param, k) in &self.params {
            items.push((k.clone(), param.to_string()));
        }
        if !self.constant.is_zero() {
            items.push((self.constant.clone(), String::new()));
        }
        if items.is_empty() {
            return f.write_str("0");
        }
        for (i, (coef, ident)) in items.iter().enumerate() {
            let negative = coef.is_negative();
            let magnitude = coef.abs();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if ident.is_empty() {
                f.write_str(&format_rational(&magnitude))?;
            } else if magnitude.is_one() {
                f.write_str(ident)?;
            } else {
                write!(f, "{}*{ident}", format_rational(&magnitude))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Le,
    Ge,
    Eq,
    Lt,
    Gt,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
            Sense::Lt => "<",
            Sense::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Sense> {
        Some(match s.trim() {
            "<=" | "=<" | "≤" => Sense::Le,
            ">=" | "=>" | "≥" => Sense::Ge,
            "=" | "==" => Sense::Eq,
            "<" => Sense::Lt,
            ">" => Sense::Gt,
            _ => return None,
        })
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Sense::Lt | Sense::Gt)
    }

    /// The sense obtained by multiplying both sides by -1.
    pub fn reversed(self) -> Sense {
        match self {
            Sense::Le => Sense::Ge,
            Sense::Ge => Sense::Le,
            Sense::Eq => Sense::Eq,
            Sense::Lt => Sense::Gt,
            Sense::Gt => Sense::Lt,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: Option<String>,
    pub lhs: LinearExpr,
    pub sense: Sense,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(lhs: LinearExpr, sense: Sense, rhs: Rational) -> Self {
        Constraint {
            name: None,
            lhs,
            sense,
            rhs,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.sense, format_rational(&self.rhs))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

impl ObjectiveSense {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveSense::Minimize => "minimize",
            ObjectiveSense::Maximize => "maximize",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub name: Option<String>,
    pub expr: LinearExpr,
}

impl Objective {
    pub fn minimize(expr: LinearExpr) -> Self {
        Objective {
            sense: ObjectiveSense::Minimize,
            name: None,
            expr,
        }
    }

    pub fn maximize(expr: LinearExpr) -> Self {
        Objective {
            sense: ObjectiveSense::Maximize,
            name: None,
            expr,
        }
    }
}

/// Where the value of a file-backed parameter lives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    /// Whole column (CSV) or top-level key (JSON).
    Column(String),
    /// Single cell; `row` counts data rows from 1 (the CSV header is row 0).
    Cell { column: String, row: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BindingSource {
    Scalar(Rational),
    Vector(Vec<Rational>),
    Table(Vec<Vec<Rational>>),
    File { path: String, selector: Selector },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataBinding {
    pub parameter: String,
    pub source: BindingSource,
}

impl DataBinding {
    pub fn is_file(&self) -> bool {
        matches!(self.source, BindingSource::File { .. })
    }

    /// Materialized value for inline bindings; `None` for file references.
    pub fn inline_value(&self) -> Option<ParamValue> {
        match &self.source {
            BindingSource::Scalar(v) => Some(ParamValue::Scalar(v.clone())),
            BindingSource::Vector(v) => Some(ParamValue::Vector(v.clone())),
            BindingSource::Table(t) => Some(ParamValue::Table(t.clone())),
            BindingSource::File { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemIR {
    pub variables: Vec<VariableDecl>,
    pub objective: Objective,
    pub constraints: Vec<Constraint>,
    pub bindings: Vec<DataBinding>,
    pub metadata: BTreeMap<String, String>,
}

impl ProblemIR {
    pub fn new(variables: Vec<VariableDecl>, objective: Objective) -> Self {
        ProblemIR {
            variables,
            objective,
            constraints: Vec::new(),
            bindings: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn constraint(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn binding(&self, parameter: &str) -> Option<&DataBinding> {
        self.bindings.iter().find(|b| b.parameter == parameter)
    }

    pub fn expressions(&self) -> impl Iterator<Item = &LinearExpr> {
        std::iter::once(&self.objective.expr).chain(self.constraints.iter().map(|c| &c.lhs))
    }

    /// Every parameter the expressions mention, with the index shapes used.
    pub fn parameter_usage(&self) -> BTreeMap<String, BTreeSet<Vec<usize>>> {
        let mut usage: BTreeMap<String, BTreeSet<Vec<usize>>> = BTreeMap::new();
        for expr in self.expressions() {
            for p in expr.param_refs() {
                usage.entry(p.name.clone()).or_default().insert(p.index.clone());
            }
        }
        usage
    }

    /// Referenced parameters with no binding at all.
    pub fn unresolved_parameters(&self) -> Vec<String> {
        self.parameter_usage()
            .into_keys()
            .filter(|name| self.binding(name).is_none())
            .collect()
    }

    pub fn is_numeric(&self) -> bool {
        self.expressions().all(LinearExpr::is_numeric)
    }

    pub fn has_strict_constraints(&self) -> bool {
        self.constraints.iter().any(|c| c.sense.is_strict())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json::problem_to_json(self)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, SchemaError> {
        json::problem_from_json(value)
    }
}

impl Serialize for ProblemIR {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProblemIR {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        ProblemIR::from_json(&value).map_err(serde::de::Error::custom)
    }
}

/// Words the modeling language reserves; they cannot name variables or
/// parameters.
pub const RESERVED_WORDS: &[&str] = &[
    "var", "param", "integer", "binary", "maximize", "minimize", "inf",
];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrError {
    #[error("invalid formulation: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unresolved parameters: {}", .0.join(", "))]
    UnresolvedParameters(Vec<String>),
    #[error("missing value for parameter {0}")]
    MissingParameter(String),
    #[error("dimension mismatch for parameter {parameter}: {detail}")]
    DimensionMismatch { parameter: String, detail: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Fails with [`IrError::Invalid`] unless `validate` comes back clean.
pub fn ensure_valid(p: &ProblemIR) -> Result<(), IrError> {
    let violations = validate(p);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(IrError::Invalid(violations))
    }
}
