//! Serde helpers for f64 fields that may legitimately be infinite
//! (dimension parameter `n = ∞`, curvature `K* = −∞`).
//!
//! serde_json maps non-finite floats to `null`; these helpers keep them
//! round-trippable as the strings `"inf"` / `"-inf"` instead.

pub mod ext_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => parse(&s).ok_or_else(|| {
                de::Error::custom(format!("invalid extended float literal `{s}`"))
            }),
        }
    }

    pub fn parse(s: &str) -> Option<f64> {
        match s {
            "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
            "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
            "nan" | "NaN" => Some(f64::NAN),
            other => other.parse().ok(),
        }
    }

    /// Display form matching the serialized convention.
    pub fn display(v: f64) -> String {
        if v.is_finite() {
            format!("{v}")
        } else if v > 0.0 {
            "inf".to_string()
        } else if v < 0.0 {
            "-inf".to_string()
        } else {
            "nan".to_string()
        }
    }
}
