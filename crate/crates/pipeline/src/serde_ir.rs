//! `serde(with = ...)` adapters that store a `ProblemIR` in its JSON schema.

use lpchat_core::ir::ProblemIR;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

pub fn serialize<S: Serializer>(p: &ProblemIR, s: S) -> Result<S::Ok, S::Error> {
    p.to_json().serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ProblemIR, D::Error> {
    let v = Value::deserialize(d)?;
    ProblemIR::from_json(&v).map_err(D::Error::custom)
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Option<ProblemIR>, s: S) -> Result<S::Ok, S::Error> {
        p.as_ref().map(ProblemIR::to_json).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ProblemIR>, D::Error> {
        match Option::<Value>::deserialize(d)? {
            None => Ok(None),
            Some(v) => ProblemIR::from_json(&v).map(Some).map_err(D::Error::custom),
        }
    }
}
