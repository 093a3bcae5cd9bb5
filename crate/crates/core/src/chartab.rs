//! Character-table slices, class fusions and element-order lists.

use crate::cyclotomic::CycValue;
use crate::rat::Rat;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChartabError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("unknown character {0}")]
    UnknownCharacter(u32),
    #[error("no {prime}-power map entry for class {class}")]
    MissingPowerMap { class: String, prime: u64 },
    #[error("class {class} has order {order}, not coprime to characteristic {p}")]
    NotCoprime { class: String, order: u64, p: u64 },
    #[error("no class of element order {0}")]
    NoClassOfOrder(u64),
    #[error("class {class} has several candidate images {candidates:?}")]
    AmbiguousFusion { class: String, candidates: Vec<String> },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    pub order: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub id: u32,
    pub degree: u64,
    pub values: BTreeMap<String, CycValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharTableSlice {
    pub group: String,
    pub characteristic: u64,
    pub classes: Vec<ClassInfo>,
    /// prime → (class → class of prime-th powers)
    pub power_maps: BTreeMap<u64, BTreeMap<String, String>>,
    pub characters: Vec<Character>,
    pub provenance: String,
}

#[derive(Deserialize)]
struct RawSlice {
    group: String,
    characteristic: u64,
    classes: Vec<ClassInfo>,
    #[serde(default)]
    power_maps: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    characters: Vec<RawCharacter>,
    #[serde(default)]
    provenance: String,
}

#[derive(Deserialize)]
struct RawCharacter {
    id: u32,
    degree: u64,
    values: BTreeMap<String, Value>,
}

pub(crate) fn read_json(path: &Path) -> Result<Value, ChartabError> {
    let io = |m: String| ChartabError::Io { path: path.display().to_string(), message: m };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| io(e.to_string()))
}

fn is_prime(n: u64) -> bool {
    crate::cyclotomic::is_prime(n)
}

fn prime_factors(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| n.is_multiple_of(p) && is_prime(p)).collect()
}

/// Parses and validates a slice document.
pub fn load_slice(doc: &Value) -> Result<CharTableSlice, ChartabError> {
    let raw: RawSlice = serde_json::from_value(doc.clone()).map_err(|e| ChartabError::Schema(e.to_string()))?;
    let inv = |m: String| ChartabError::Invariant(format!("{}: {m}", raw.group));
    let p = raw.characteristic;
    if p != 0 && !is_prime(p) {
        return Err(inv(format!("characteristic {p} is neither 0 nor prime")));
    }
    if raw.classes.is_empty() {
        return Err(inv("no classes".into()));
    }
    let mut orders = BTreeMap::new();
    for c in &raw.classes {
        if c.order == 0 {
            return Err(inv(format!("class {} has order 0", c.name)));
        }
        if orders.insert(c.name.clone(), c.order).is_some() {
            return Err(inv(format!("class {} listed twice", c.name)));
        }
        if p != 0 && c.order % p == 0 {
            return Err(inv(format!("class {} of order {} is not {p}-regular", c.name, c.order)));
        }
    }
    let identity = raw
        .classes
        .iter()
        .find(|c| c.order == 1)
        .ok_or_else(|| inv("no identity class".into()))?
        .name
        .clone();

    let mut power_maps = BTreeMap::new();
    for (key, map) in raw.power_maps {
        let r: u64 = key.parse().map_err(|_| ChartabError::Schema(format!("power map key {key:?} is not an integer")))?;
        if !is_prime(r) {
            return Err(inv(format!("power map key {r} is not prime")));
        }
        for (from, to) in &map {
            let (Some(&o1), Some(&o2)) = (orders.get(from), orders.get(to)) else {
                return Err(inv(format!("{r}-power map {from} -> {to} names an unknown class")));
            };
            if o2 != o1 / o1.gcd(&r) {
                return Err(inv(format!("{r}-power map {from} -> {to} sends order {o1} to order {o2}")));
            }
        }
        power_maps.insert(r, map);
    }

    let mut characters = Vec::with_capacity(raw.characters.len());
    let mut ids = BTreeSet::new();
    for ch in raw.characters {
        if !ids.insert(ch.id) {
            return Err(inv(format!("character {} listed twice", ch.id)));
        }
        let mut values = BTreeMap::new();
        for (class, v) in &ch.values {
            if !orders.contains_key(class) {
                return Err(inv(format!("character {} has a value on unknown class {class}", ch.id)));
            }
            let x = CycValue::from_json(v).map_err(|e| inv(format!("character {} at {class}: {e}", ch.id)))?;
            values.insert(class.clone(), x);
        }
        if let Some(missing) = raw.classes.iter().find(|c| !values.contains_key(&c.name)) {
            return Err(inv(format!("character {} has no value on class {}", ch.id, missing.name)));
        }
        if values[&identity] != CycValue::int(ch.degree as i64) {
            return Err(inv(format!(
                "character {} has value {} at {identity} but degree {}",
                ch.id, values[&identity], ch.degree
            )));
        }
        characters.push(Character { id: ch.id, degree: ch.degree, values });
    }
    Ok(CharTableSlice {
        group: raw.group,
        characteristic: p,
        classes: raw.classes,
        power_maps,
        characters,
        provenance: raw.provenance,
    })
}

pub fn load_slice_file(path: &Path) -> Result<CharTableSlice, ChartabError> {
    load_slice(&read_json(path)?)
}

impl CharTableSlice {
    pub fn class(&self, name: &str) -> Result<&ClassInfo, ChartabError> {
        self.classes.iter().find(|c| c.name == name).ok_or_else(|| ChartabError::UnknownClass(name.to_string()))
    }

    pub fn character(&self, id: u32) -> Result<&Character, ChartabError> {
        self.characters.iter().find(|c| c.id == id).ok_or(ChartabError::UnknownCharacter(id))
    }

    pub fn value(&self, id: u32, class: &str) -> Result<&CycValue, ChartabError> {
        let ch = self.character(id)?;
        ch.values.get(class).ok_or_else(|| ChartabError::UnknownClass(class.to_string()))
    }

    pub fn identity_class(&self) -> &str {
        &self.classes.iter().find(|c| c.order == 1).expect("validated on load").name
    }

    pub fn character_ids(&self) -> Vec<u32> {
        self.characters.iter().map(|c| c.id).collect()
    }

    /// Class of `g^d` for a divisor `d` of the order of `g ∈ class`.
    pub fn power_class(&self, class: &str, d: u64) -> Result<String, ChartabError> {
        let order = self.class(class)?.order;
        debug_assert_eq!(order % d, 0);
        let mut cur = class.to_string();
        let mut rest = d;
        let mut cur_order = order;
        while rest > 1 {
            let r = prime_factors(rest)[0];
            if cur_order % r != 0 {
                return Err(ChartabError::Invariant(format!("{r} does not divide the order of {cur}")));
            }
            cur = self
                .power_maps
                .get(&r)
                .and_then(|m| m.get(&cur))
                .cloned()
                .ok_or_else(|| ChartabError::MissingPowerMap { class: cur.clone(), prime: r })?;
            cur_order /= r;
            rest /= r;
        }
        Ok(cur)
    }
}

/// `dim` of the fixed space of `⟨g⟩`, i.e. `(1/o)·Σ_{j<o} χ(g^j)`.
pub fn fixed_point_count(slice: &CharTableSlice, id: u32, class: &str) -> Result<Rat, ChartabError> {
    let info = slice.class(class)?;
    let o = info.order;
    let p = slice.characteristic;
    if p != 0 && o % p == 0 {
        return Err(ChartabError::NotCoprime { class: class.to_string(), order: o, p });
    }
    let ch = slice.character(id)?;
    let mut total = CycValue::zero();
    for d in (1..=o).filter(|d| o % d == 0) {
        let c = slice.power_class(class, d)?;
        let v = &ch.values[&c];
        // g^j with gcd(j, o) = d is (g^d)^u for u a unit mod o/d.
        let m = o / d;
        for u in (1..=m).filter(|u| u.gcd(&m) == 1) {
            total = total + v.galois(u as i64);
        }
    }
    let r = total
        .as_rational()
        .ok_or_else(|| ChartabError::Invariant(format!("fixed-point sum for character {id} on {class} is irrational")))?;
    Ok(r / Rat::from_integer(o.into()))
}

/// Characters with no fixed points on any class of the given order.
pub fn fpf_filter(slice: &CharTableSlice, order: u64) -> Result<Vec<u32>, ChartabError> {
    let classes: Vec<&ClassInfo> = slice.classes.iter().filter(|c| c.order == order).collect();
    if classes.is_empty() {
        return Err(ChartabError::NoClassOfOrder(order));
    }
    let mut out = Vec::new();
    for ch in &slice.characters {
        let mut free = true;
        for c in &classes {
            if !fixed_point_count(slice, ch.id, &c.name)?.is_zero() {
                free = false;
                break;
            }
        }
        if free {
            out.push(ch.id);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FusionTarget {
    One(String),
    Many(Vec<String>),
}

impl FusionTarget {
    pub fn candidates(&self) -> Vec<&str> {
        match self {
            FusionTarget::One(s) => vec![s.as_str()],
            FusionTarget::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionMap {
    pub sub: String,
    pub parent: String,
    pub map: BTreeMap<String, FusionTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FusionMap {
    pub fn from_json(v: &Value) -> Result<Self, ChartabError> {
        serde_json::from_value(v.clone()).map_err(|e| ChartabError::Schema(format!("fusion: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ChartabError> {
        Self::from_json(&read_json(path)?)
    }

    /// The parent class of `class`, `None` if unmapped; several candidates are an error.
    pub fn image(&self, class: &str) -> Result<Option<&str>, ChartabError> {
        match self.map.get(class) {
            None => Ok(None),
            Some(t) => match t.candidates()[..] {
                [one] => Ok(Some(one)),
                _ => Err(ChartabError::AmbiguousFusion {
                    class: class.to_string(),
                    candidates: t.candidates().iter().map(|s| s.to_string()).collect(),
                }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderList {
    pub group: String,
    pub orders: BTreeSet<u64>,
}

impl OrderList {
    pub fn from_json(v: &Value) -> Result<Self, ChartabError> {
        let list: OrderList =
            serde_json::from_value(v.clone()).map_err(|e| ChartabError::Schema(format!("order list: {e}")))?;
        list.validate()?;
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<Self, ChartabError> {
        Self::from_json(&read_json(path)?)
    }

    pub fn validate(&self) -> Result<(), ChartabError> {
        if self.orders.contains(&0) {
            return Err(ChartabError::Invariant(format!("{}: order 0 listed", self.group)));
        }
        for &m in &self.orders {
            if let Some(d) = (1..=m).find(|d| m % d == 0 && !self.orders.contains(d)) {
                return Err(ChartabError::Invariant(format!(
                    "{}: order {m} is listed but its divisor {d} is not",
                    self.group
                )));
            }
        }
        Ok(())
    }
}

pub enum ParentData<'a> {
    Slice(&'a CharTableSlice),
    Orders(&'a OrderList),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionCheck {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

/// Numeric prefix of an ATLAS-style class name (`"31A"` → 31).
pub fn atlas_order(name: &str) -> Option<u64> {
    let digits: String = name.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

pub fn validate_fusion(f: &FusionMap, sub: &CharTableSlice, parent: ParentData<'_>) -> Result<FusionCheck, ChartabError> {
    let mut diagnostics = Vec::new();
    if f.sub != sub.group {
        diagnostics.push(format!("fusion is from {} but the slice is {}", f.sub, sub.group));
    }
    for (class, target) in &f.map {
        let o = sub.class(class)?.order;
        for cand in target.candidates() {
            let po = match &parent {
                ParentData::Slice(ps) => ps.class(cand)?.order,
                ParentData::Orders(ol) => {
                    if !ol.orders.contains(&o) {
                        diagnostics.push(format!("{class} -> {cand}: order {o} does not occur in {}", ol.group));
                        continue;
                    }
                    atlas_order(cand).ok_or_else(|| ChartabError::UnknownClass(cand.to_string()))?
                }
            };
            if po != o {
                diagnostics.push(format!("{class} (order {o}) -> {cand} (order {po})"));
            }
        }
    }
    Ok(FusionCheck { valid: diagnostics.is_empty(), diagnostics })
}
