//! Materializes file-backed parameter bindings. File contents flow only
//! into the numeric IR, never into prompts.

use std::collections::BTreeMap;

use lpchat_core::ir::{substitute_parameters, BindingSource, IrError, ParamValue, ProblemIR, Selector};
use lpchat_core::rational::{parse_rational, rational_from_json, Rational};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("data file {0} was not uploaded")]
    MissingFile(String),
    #[error("{path}: {detail}")]
    BadSelector { path: String, detail: String },
    #[error("{path}: {detail}")]
    BadFile { path: String, detail: String },
    #[error("dimension mismatch for parameter {parameter}: {detail}")]
    DimensionMismatch { parameter: String, detail: String },
    #[error("no value for parameter {0}")]
    MissingParameter(String),
}

impl From<IrError> for DataError {
    fn from(e: IrError) -> Self {
        match e {
            IrError::DimensionMismatch { parameter, detail } => DataError::DimensionMismatch { parameter, detail },
            IrError::MissingParameter(p) => DataError::MissingParameter(p),
            IrError::UnresolvedParameters(ps) => DataError::MissingParameter(ps.join(", ")),
            IrError::Invalid(v) => DataError::BadSelector {
                path: String::new(),
                detail: format!("{v:?}"),
            },
        }
    }
}

/// Read-only access to a session's uploaded files.
pub trait FileSource {
    fn read(&self, name: &str) -> Option<Vec<u8>>;
}

impl FileSource for BTreeMap<String, Vec<u8>> {
    fn read(&self, name: &str) -> Option<Vec<u8>> {
        self.get(name).cloned()
    }
}

/// Resolves every file binding of `p` against `files` and substitutes all
/// parameters. A column becomes a vector, or a scalar when the parameter is
/// used without an index and the column has one value.
pub fn bind_data(p: &ProblemIR, files: &dyn FileSource) -> Result<ProblemIR, DataError> {
    let usage = p.parameter_usage();
    let mut values = BTreeMap::new();
    for b in &p.bindings {
        let BindingSource::File { path, selector } = &b.source else {
            continue;
        };
        let bytes = files.read(path).ok_or_else(|| DataError::MissingFile(path.clone()))?;
        let scalar_use = usage
            .get(&b.parameter)
            .is_some_and(|shapes| shapes.iter().all(Vec::is_empty));
        let value = match extension(path).as_deref() {
            Some("csv") => from_csv(path, &bytes, selector)?,
            Some("json") => from_json(path, &bytes, selector)?,
            _ => {
                return Err(DataError::BadFile {
                    path: path.clone(),
                    detail: "only .csv and .json files are supported".into(),
                })
            }
        };
        let value = match value {
            ParamValue::Vector(mut v) if scalar_use && v.len() == 1 => ParamValue::Scalar(v.remove(0)),
            other => other,
        };
        values.insert(b.parameter.clone(), value);
    }
    let mut bound = substitute_parameters(p, &values)?;
    bound.bindings.retain(|b| !b.is_file());
    Ok(bound)
}

fn extension(path: &str) -> Option<String> {
    std::path::Path::new(path)
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
}

fn bad_file(path: &str, detail: impl Into<String>) -> DataError {
    DataError::BadFile {
        path: path.to_string(),
        detail: detail.into(),
    }
}

fn bad_selector(path: &str, detail: impl Into<String>) -> DataError {
    DataError::BadSelector {
        path: path.to_string(),
        detail: detail.into(),
    }
}

fn from_csv(path: &str, bytes: &[u8], selector: &Selector) -> Result<ParamValue, DataError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers().map_err(|e| bad_file(path, e.to_string()))?.clone();
    let column = match selector {
        Selector::Column(c) | Selector::Cell { column: c, .. } => c,
    };
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| bad_selector(path, format!("no column named {column:?}")))?;
    let mut cells = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad_file(path, e.to_string()))?;
        let raw = record.get(idx).unwrap_or("");
        // Row numbers in messages count data rows from 1.
        let value = parse_rational(raw)
            .ok_or_else(|| bad_file(path, format!("row {}, column {column:?}: {raw:?} is not a number", i + 1)))?;
        cells.push(value);
    }
    match selector {
        Selector::Column(_) => Ok(ParamValue::Vector(cells)),
        Selector::Cell { row, .. } => row
            .checked_sub(1)
            .and_then(|r| cells.get(r).cloned())
            .map(ParamValue::Scalar)
            .ok_or_else(|| bad_selector(path, format!("row {row} out of range (1..={})", cells.len()))),
    }
}

fn number(path: &str, v: &Value) -> Result<Rational, DataError> {
    rational_from_json(v).map_err(|e| bad_file(path, e))
}

fn from_json(path: &str, bytes: &[u8], selector: &Selector) -> Result<ParamValue, DataError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| bad_file(path, e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| bad_file(path, "top level must be an object"))?;
    let key = match selector {
        Selector::Column(c) | Selector::Cell { column: c, .. } => c,
    };
    let value = obj
        .get(key)
        .ok_or_else(|| bad_selector(path, format!("no key named {key:?}")))?;
    match selector {
        Selector::Cell { row, .. } => {
            let items = value
                .as_array()
                .ok_or_else(|| bad_selector(path, format!("{key:?} is not an array")))?;
            let item = row
                .checked_sub(1)
                .and_then(|r| items.get(r))
                .ok_or_else(|| bad_selector(path, format!("row {row} out of range (1..={})", items.len())))?;
            Ok(ParamValue::Scalar(number(path, item)?))
        }
        Selector::Column(_) => match value {
            Value::Array(items) if items.iter().all(Value::is_array) && !items.is_empty() => {
                let rows = items
                    .iter()
                    .map(|r| r.as_array().unwrap().iter().map(|v| number(path, v)).collect())
                    .collect::<Result<Vec<Vec<_>>, _>>()?;
                Ok(ParamValue::Table(rows))
            }
            Value::Array(items) => Ok(ParamValue::Vector(
                items.iter().map(|v| number(path, v)).collect::<Result<_, _>>()?,
            )),
            other => Ok(ParamValue::Scalar(number(path, other)?)),
        },
    }
}
