//! Case and stage files.

use super::CaseError;
use crate::linform::CycForm;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Infeasible,
    Feasible,
    Determined,
}

impl Expectation {
    pub fn as_str(self) -> &'static str {
        match self {
            Expectation::Infeasible => "infeasible",
            Expectation::Feasible => "feasible",
            Expectation::Determined => "determined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub name: String,
    pub group: String,
    pub characteristic: u64,
    pub orders: String,
    pub parent_classes: String,
    /// Element orders assumed to act without fixed points.
    pub fixed_point_free_orders: Vec<u64>,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub assumptions: Vec<String>,
    pub stages: Vec<String>,
    pub expected_verdict: Expectation,
}

/// Which subgroup characters may occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Allowed {
    All,
    Fpf(u64),
    Ids(Vec<u32>),
}

impl Serialize for Allowed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Allowed::All => s.serialize_str("all"),
            Allowed::Fpf(n) => s.serialize_str(&format!("fpf:{n}")),
            Allowed::Ids(ids) => ids.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Allowed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "all" => Ok(Allowed::All),
            Value::String(s) => s
                .strip_prefix("fpf:")
                .and_then(|n| n.parse().ok())
                .map(Allowed::Fpf)
                .ok_or_else(|| D::Error::custom(format!("bad allowed spec {s:?}"))),
            v @ Value::Array(_) => serde_json::from_value(v).map(Allowed::Ids).map_err(D::Error::custom),
            v => Err(D::Error::custom(format!("bad allowed spec {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarNames {
    #[default]
    Id,
    Degree,
}

/// A target value: a fact produced by an earlier stage (`"@CLASS"`) or a literal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Fact(String),
    Form(CycForm),
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Target::Fact(c) => s.serialize_str(&format!("@{c}")),
            Target::Form(f) => f.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if let Some(c) = v.as_str().and_then(|s| s.strip_prefix('@')) {
            return Ok(Target::Fact(c.to_string()));
        }
        CycForm::from_json(&v).map(Target::Form).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rational,
    Integer,
    Propagate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub methods: Vec<Method>,
    /// Solve the `k = 1` instance of a system homogeneous in one parameter.
    #[serde(default)]
    pub scale: bool,
    #[serde(default)]
    pub bound_row: Option<usize>,
    #[serde(default)]
    pub nontrivial: bool,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifySpec {
    pub params: Vec<String>,
    #[serde(rename = "as")]
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    Pin(Vec<String>),
    PinCyclotomic(Vec<String>),
    Split(u64),
    Rationalize(bool),
    EqualFusion([String; 2]),
    Solve(SolveSpec),
    Identify(IdentifySpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicities {
    /// One fresh parameter per allowed character, in order.
    pub free: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub built_system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational_system: Option<String>,
    /// Compare `rational_system` as a multiset of rows.
    #[serde(default)]
    pub unordered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_degrees: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_ids: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    pub parent: String,
    pub sub_slice: String,
    pub fusion: String,
    pub allowed: Allowed,
    #[serde(default)]
    pub var_names: VarNames,
    #[serde(default)]
    pub multiplicities: Option<Multiplicities>,
    #[serde(default)]
    pub targets: BTreeMap<String, Target>,
    #[serde(default)]
    pub post: Vec<Directive>,
    #[serde(default)]
    pub expect: StageExpect,
}

/// A case with its stage files, resolved against a fixture directory.
#[derive(Debug, Clone)]
pub struct LoadedCase {
    pub root: PathBuf,
    pub file: String,
    pub spec: CaseSpec,
    pub stages: Vec<StageSpec>,
}

pub fn default_fixture_dir() -> PathBuf {
    match std::env::var_os("GKCERT_FIXTURES") {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

pub(crate) fn read_text(root: &Path, rel: &str) -> Result<String, CaseError> {
    std::fs::read_to_string(root.join(rel)).map_err(|e| CaseError::Io { path: rel.to_string(), message: e.to_string() })
}

pub(crate) fn read_value(root: &Path, rel: &str) -> Result<Value, CaseError> {
    serde_json::from_str(&read_text(root, rel)?).map_err(|e| CaseError::Parse { path: rel.to_string(), message: e.to_string() })
}

fn parse<T: serde::de::DeserializeOwned>(root: &Path, rel: &str) -> Result<T, CaseError> {
    serde_json::from_value(read_value(root, rel)?).map_err(|e| CaseError::Parse { path: rel.to_string(), message: e.to_string() })
}

/// Case names in `cases/`, sorted.
pub fn case_names(root: &Path) -> Result<Vec<String>, CaseError> {
    let dir = root.join("cases");
    let entries = std::fs::read_dir(&dir).map_err(|e| CaseError::Io { path: "cases".into(), message: e.to_string() })?;
    let mut names: Vec<String> = entries
        .filter_map(Result::ok)
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".json")).map(str::to_string))
        .collect();
    names.sort();
    Ok(names)
}

/// Exact name, or the unique case whose name starts with `name` followed by `_`.
pub fn resolve_case_name(root: &Path, name: &str) -> Result<String, CaseError> {
    let names = case_names(root)?;
    if names.iter().any(|n| n == name) {
        return Ok(name.to_string());
    }
    let hits: Vec<&String> = names.iter().filter(|n| n.starts_with(&format!("{name}_"))).collect();
    match hits[..] {
        [one] => Ok(one.clone()),
        [] => Err(CaseError::UnknownCase(name.to_string())),
        _ => Err(CaseError::AmbiguousCase(name.to_string(), hits.into_iter().cloned().collect())),
    }
}

pub fn load_case(root: &Path, name: &str) -> Result<LoadedCase, CaseError> {
    let name = resolve_case_name(root, name)?;
    let file = format!("cases/{name}.json");
    let spec: CaseSpec = parse(root, &file)?;
    let stages = spec.stages.iter().map(|s| parse(root, s)).collect::<Result<Vec<StageSpec>, _>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for s in &stages {
        if !seen.insert(&s.name) {
            return Err(CaseError::Parse { path: file.clone(), message: format!("stage name {} used twice", s.name) });
        }
    }
    Ok(LoadedCase { root: root.to_path_buf(), file, spec, stages })
}
