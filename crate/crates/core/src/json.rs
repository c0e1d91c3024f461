//! Serde helpers that print reals with exactly six decimals.

use serde::ser::{Error as _, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

fn raw(x: f64) -> Result<Box<RawValue>, serde_json::Error> {
    let text = format!("{x:.6}");
    let text = if text == "-0.000000" { "0.000000".to_string() } else { text };
    RawValue::from_string(text)
}

pub(crate) fn fixed6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(S::Error::custom(format!("cannot encode {x} in JSON")));
    }
    raw(*x).map_err(S::Error::custom)?.serialize(s)
}

pub(crate) fn fixed6_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        if !x.is_finite() {
            return Err(S::Error::custom(format!("cannot encode {x} in JSON")));
        }
        seq.serialize_element(&raw(x).map_err(S::Error::custom)?)?;
    }
    seq.end()
}

/// Pretty JSON with a trailing newline.
pub(crate) fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize infallibly");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        #[serde(serialize_with = "fixed6")]
        b: f64,
        #[serde(serialize_with = "fixed6_vec")]
        a: Vec<f64>,
    }

    #[test]
    fn six_decimals_in_declaration_order() {
        let row = Row { b: 1.0 / 3.0, a: vec![1.0, -1e-12] };
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, r#"{"b":0.333333,"a":[1.000000,0.000000]}"#);
    }
}
