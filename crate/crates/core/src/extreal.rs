//! JSON encoding of extended reals: finite values as numbers, infinities as
//! the strings `"inf"` / `"-inf"`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An `f64` that serializes `±∞` (and NaN) as string sentinels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ExtReal(pub f64);

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal(v)
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> Self {
        v.0
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

struct ExtRealVisitor;

impl Visitor<'_> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
        Ok(ExtReal(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
        Ok(ExtReal(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
        Ok(ExtReal(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
        match v.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtReal(f64::INFINITY)),
            "-inf" | "-infinity" => Ok(ExtReal(f64::NEG_INFINITY)),
            "nan" => Ok(ExtReal(f64::NAN)),
            other => other
                .parse::<f64>()
                .map(ExtReal)
                .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ExtRealVisitor)
    }
}

/// `#[serde(with = "crate::extreal::ext")]` for plain `f64` fields.
pub mod ext {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        ExtReal(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        ExtReal::deserialize(d).map(|e| e.0)
    }
}

/// Same as [`ext`] for `Option<f64>`.
pub mod ext_opt {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(ExtReal).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<ExtReal>::deserialize(d).map(|o| o.map(|e| e.0))
    }
}

/// Same as [`ext`] for `(f64, f64)` pairs.
pub mod ext_pair {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        (ExtReal(v.0), ExtReal(v.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        <(ExtReal, ExtReal)>::deserialize(d).map(|(a, b)| (a.0, b.0))
    }
}

/// Same as [`ext`] for `Option<(f64, f64)>`.
pub mod ext_pair_opt {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<(f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|(a, b)| (ExtReal(a), ExtReal(b))).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<(f64, f64)>, D::Error> {
        Option::<(ExtReal, ExtReal)>::deserialize(d).map(|o| o.map(|(a, b)| (a.0, b.0)))
    }
}
