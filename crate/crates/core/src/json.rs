//! Number formatting for structured output.
//!
//! Every float is written with 17 significant digits so that reading the
//! JSON back reproduces the exact double. Non-finite values become `null`.

use serde::Serialize;
use serde::Serializer;
use serde_json::value::RawValue;

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else {
        "null".to_string()
    }
}

pub fn f64_17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(format_f64(*v)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn vec_f64_17<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        let raw = RawValue::from_string(format_f64(*x)).map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

pub fn matrix_f64_17<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        let cells = row
            .iter()
            .map(|x| RawValue::from_string(format_f64(*x)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&cells)?;
    }
    seq.end()
}

/// Serializes with the 17-digit float convention, pretty-printed.
pub fn to_string_pretty<T: Serialize>(value: &T) -> serde_json::Result<String> {
    serde_json::to_string_pretty(value)
}
