//! Affine forms `c + Σ aᵢ·kᵢ` in named parameters.

use crate::cyclotomic::CycValue;
use crate::rat::{fmt_rat, serde_rat, Rat};
use num_traits::{One, Zero};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficient domain of a [`LinForm`].
pub trait Scalar:
    Clone + PartialEq + Zero + One + Neg<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + From<Rat>
{
    fn scalar_to_json(&self) -> Value;
    fn scalar_from_json(v: &Value) -> Result<Self, String>;
}

impl Scalar for Rat {
    fn scalar_to_json(&self) -> Value {
        Value::String(fmt_rat(self))
    }
    fn scalar_from_json(v: &Value) -> Result<Self, String> {
        serde_rat::from_json(v).map_err(|e| e.to_string())
    }
}

impl Scalar for CycValue {
    fn scalar_to_json(&self) -> Value {
        match self.as_rational() {
            Some(r) => Value::String(fmt_rat(&r)),
            None => self.to_json(),
        }
    }
    fn scalar_from_json(v: &Value) -> Result<Self, String> {
        CycValue::from_json(v).map_err(|e| e.to_string())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct LinForm<T> {
    terms: BTreeMap<String, T>,
    constant: T,
}

pub type RatForm = LinForm<Rat>;
pub type CycForm = LinForm<CycValue>;

impl<T: Scalar> Default for LinForm<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> LinForm<T> {
    pub fn zero() -> Self {
        LinForm { terms: BTreeMap::new(), constant: T::zero() }
    }

    pub fn constant(c: T) -> Self {
        LinForm { terms: BTreeMap::new(), constant: c }
    }

    pub fn param(name: &str) -> Self {
        Self::term(name, T::one())
    }

    pub fn term(name: &str, c: T) -> Self {
        let mut f = Self::zero();
        f.add_term(name, c);
        f
    }

    pub fn add_term(&mut self, name: &str, c: T) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(name) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(name.to_string(), sum);
        }
    }

    pub fn constant_term(&self) -> &T {
        &self.constant
    }

    pub fn coeff(&self, name: &str) -> T {
        self.terms.get(name).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> &BTreeMap<String, T> {
        &self.terms
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LinForm {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v.clone() * c.clone())).collect(),
            constant: self.constant.clone() * c.clone(),
        }
    }

    /// Replaces `name` by `by`.
    pub fn substitute(&self, name: &str, by: &LinForm<T>) -> Self {
        let Some(c) = self.terms.get(name) else {
            return self.clone();
        };
        let mut rest = self.clone();
        rest.terms.remove(name);
        rest + by.scale(c)
    }

    /// Value at the given parameter assignment; missing parameters are an error.
    pub fn evaluate(&self, at: &BTreeMap<String, Rat>) -> Result<T, String> {
        let mut acc = self.constant.clone();
        for (k, c) in &self.terms {
            let v = at.get(k).ok_or_else(|| format!("no value for parameter {k}"))?;
            acc = acc + c.clone() * T::from(v.clone());
        }
        Ok(acc)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LinForm<U> {
        let mut out = LinForm::constant(f(&self.constant));
        for (k, c) in &self.terms {
            out.add_term(k, f(c));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, c) in &self.terms {
            m.insert(k.clone(), c.scalar_to_json());
        }
        if !self.constant.is_zero() || self.terms.is_empty() {
            m.insert("const".into(), self.constant.scalar_to_json());
        }
        Value::Object(m)
    }

    /// Accepts `{"k": c, "const": c}` objects or a bare scalar (a constant form).
    pub fn from_json(v: &Value) -> Result<Self, String> {
        match v {
            Value::Object(m) if !(m.contains_key("rat") || m.contains_key("quad") || m.contains_key("zeta")) => {
                let mut f = Self::zero();
                for (k, c) in m {
                    let c = T::scalar_from_json(c)?;
                    if k == "const" {
                        f.constant = f.constant + c;
                    } else {
                        f.add_term(k, c);
                    }
                }
                Ok(f)
            }
            other => Ok(Self::constant(T::scalar_from_json(other)?)),
        }
    }
}

impl CycForm {
    /// The form with rational coefficients, if every coefficient is rational.
    pub fn to_rational(&self) -> Option<RatForm> {
        let mut out = RatForm::constant(self.constant.as_rational()?);
        for (k, c) in &self.terms {
            out.add_term(k, c.as_rational()?);
        }
        Some(out)
    }
}

impl RatForm {
    pub fn to_cyc(&self) -> CycForm {
        self.map(|c| CycValue::rational(c.clone()))
    }
}

impl<T: Scalar> serde::Serialize for LinForm<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de, T: Scalar> serde::Deserialize<'de> for LinForm<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Self::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Add for LinForm<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (k, c) in rhs.terms {
            self.add_term(&k, c);
        }
        self.constant = self.constant + rhs.constant;
        self
    }
}

impl<T: Scalar> Sub for LinForm<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for LinForm<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(&-T::one())
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for LinForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| if c.is_one() { k.clone() } else { format!("({c})*{k}") })
            .collect();
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(format!("{}", self.constant));
        }
        write!(f, "{}", parts.join(" + "))
    }
}
