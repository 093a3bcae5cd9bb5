//! Helpers around [`BigRational`]: parsing the `"p/q"` fixture notation and
//! the serde adapters used by every JSON surface.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRatError(pub String);

/// Parses `"p"`, `"-p"`, `"p/q"`. The result is reduced with a positive denominator.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let t = s.trim();
    let err = || ParseRatError(s.to_string());
    match t.split_once('/') {
        None => BigInt::from_str(t).map(Rat::from_integer).map_err(|_| err()),
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            Ok(Rat::new(p, q))
        }
    }
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn fmt_rat(r: &Rat) -> String {
    r.to_string()
}

pub fn is_integral(r: &Rat) -> bool {
    r.denom().is_one()
}

pub fn floor_rat(r: &Rat) -> BigInt {
    r.floor().to_integer()
}

pub fn abs_rat(r: &Rat) -> Rat {
    r.abs()
}

/// Serialises a rational as its `"p/q"` string.
pub mod serde_rat {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        from_json(&v).map_err(de::Error::custom)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Rat, ParseRatError> {
        match v {
            serde_json::Value::String(s) => parse_rat(s),
            serde_json::Value::Number(n) if n.is_i64() => Ok(rat(n.as_i64().unwrap())),
            other => Err(ParseRatError(other.to_string())),
        }
    }
}

/// Serialises `Vec<Rat>` as an array of `"p/q"` strings.
pub mod serde_rat_vec {
    use super::*;
    use serde::{de, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&fmt_rat(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter()
            .map(|x| serde_rat::from_json(x).map_err(de::Error::custom))
            .collect()
    }
}

/// Serialises `Option<Rat>` as a string or `null`.
pub mod serde_rat_opt {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&fmt_rat(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let v = Option::<serde_json::Value>::deserialize(d)?;
        v.map(|x| serde_rat::from_json(&x).map_err(de::Error::custom))
            .transpose()
    }
}
