use crate::linalg::RatMatrix;
use crate::linform::RatForm;
use crate::rat::Rat;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

use super::FeasError;

/// `A·x = rhs(params)` with `x ≥ 0` and every parameter a non-negative integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSystem {
    pub vars: Vec<String>,
    pub params: Vec<String>,
    pub a: RatMatrix,
    pub rhs: Vec<RatForm>,
    /// Excludes the all-zero solution.
    pub nontrivial: bool,
}

impl ParamSystem {
    pub fn new(vars: Vec<String>, params: Vec<String>, a: RatMatrix, rhs: Vec<RatForm>) -> Result<Self, FeasError> {
        let sys = ParamSystem { vars, params, a, rhs, nontrivial: false };
        sys.validate()?;
        Ok(sys)
    }

    /// Unknowns named `x1..xn`, no parameters.
    pub fn numeric(a: RatMatrix, b: Vec<Rat>) -> Result<Self, FeasError> {
        let vars = (1..=a.cols()).map(|i| format!("x{i}")).collect();
        ParamSystem::new(vars, vec![], a, b.into_iter().map(RatForm::constant).collect())
    }

    pub fn with_nontrivial(mut self, flag: bool) -> Self {
        self.nontrivial = flag;
        self
    }

    pub fn validate(&self) -> Result<(), FeasError> {
        if self.rhs.len() != self.a.rows() {
            return Err(FeasError::Dimension(format!("{} right-hand sides for {} rows", self.rhs.len(), self.a.rows())));
        }
        if self.vars.len() != self.a.cols() {
            return Err(FeasError::Dimension(format!("{} variable names for {} columns", self.vars.len(), self.a.cols())));
        }
        for f in &self.rhs {
            if let Some(p) = f.params().find(|p| !self.params.iter().any(|q| q == p)) {
                return Err(FeasError::Param(format!("undeclared parameter {p}")));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// Right-hand side at a full parameter assignment.
    pub fn instantiate(&self, at: &BTreeMap<String, Rat>) -> Result<Vec<Rat>, FeasError> {
        for p in &self.params {
            if !at.contains_key(p) {
                return Err(FeasError::Param(format!("no value for parameter {p}")));
            }
        }
        self.rhs.iter().map(|f| f.evaluate(at).map_err(FeasError::Param)).collect()
    }

    /// Right-hand side when the system has no parameters.
    pub fn numeric_rhs(&self) -> Result<Vec<Rat>, FeasError> {
        self.instantiate(&BTreeMap::new())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vars": self.vars,
            "params": self.params,
            "nontrivial": self.nontrivial,
            "a": serde_json::to_value(&self.a).expect("matrix serialises"),
            "rhs": self.rhs.iter().map(RatForm::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, FeasError> {
        let bad = |m: &str| FeasError::Format(m.to_string());
        let strings = |key: &str| -> Result<Vec<String>, FeasError> {
            match v.get(key) {
                None => Ok(vec![]),
                Some(x) => serde_json::from_value(x.clone()).map_err(|e| bad(&format!("{key}: {e}"))),
            }
        };
        let a: RatMatrix = serde_json::from_value(v.get("a").cloned().ok_or_else(|| bad("missing a"))?)
            .map_err(|e| bad(&format!("a: {e}")))?;
        let rhs = v
            .get("rhs")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing rhs"))?
            .iter()
            .map(|f| RatForm::from_json(f).map_err(|e| bad(&format!("rhs: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut vars = strings("vars")?;
        if vars.is_empty() {
            vars = (1..=a.cols()).map(|i| format!("x{i}")).collect();
        }
        let mut params = strings("params")?;
        if params.is_empty() {
            let mut seen: Vec<String> = rhs.iter().flat_map(|f| f.params().map(str::to_string)).collect();
            seen.sort();
            seen.dedup();
            params = seen;
        }
        let nontrivial = v.get("nontrivial").and_then(Value::as_bool).unwrap_or(false);
        Ok(ParamSystem::new(vars, params, a, rhs)?.with_nontrivial(nontrivial))
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.to_json()).expect("json");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

impl serde::Serialize for ParamSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for ParamSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ParamSystem::from_json(&v).map_err(serde::de::Error::custom)
    }
}
