//! Restriction systems: multiplicities of subgroup Brauer characters in the
//! restriction of a character whose values are known on some parent classes.

use crate::chartab::{CharTableSlice, ChartabError, FusionMap};
use crate::cyclotomic::{basis_exponents, expand_primitive_basis, CycError, CycValue};
use crate::feasibility::{FeasError, ParamSystem};
use crate::linalg::{rref, RatMatrix};
use crate::linform::{CycForm, RatForm};
use crate::rat::Rat;
use num_integer::Integer;
use num_traits::Zero;
use serde_json::{json, Value};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RestrictionError {
    #[error(transparent)]
    Chartab(#[from] ChartabError),
    #[error(transparent)]
    Cyclotomic(#[from] CycError),
    #[error(transparent)]
    Feasibility(#[from] FeasError),
    #[error("character {0} is not in the slice")]
    NotAllowed(u32),
    #[error("target class {0} is not the image of any subgroup class")]
    TargetNotHit(String),
    #[error("values at {parent} disagree: {first} via {first_class}, {second} via {second_class}")]
    Inconsistent { parent: String, first_class: String, first: String, second_class: String, second: String },
    #[error("value at {0} is not rational: {1}")]
    Irrational(String, String),
    #[error("two classes {0} and {1} do not fuse to the same parent class")]
    NotFused(String, String),
    #[error("no multiplicity for character {0}")]
    Unresolved(u32),
}

#[derive(Debug, Clone)]
pub struct RestrictionScenario {
    pub parent: String,
    pub sub: CharTableSlice,
    pub fusion: FusionMap,
    pub allowed: Vec<u32>,
    pub params: Vec<String>,
    pub targets: BTreeMap<String, CycForm>,
}

/// `Σ coeffs[i]·x_i = rhs`, coefficients in a cyclotomic field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycRow {
    pub sub_class: String,
    pub parent_class: String,
    pub coeffs: Vec<CycValue>,
    pub rhs: CycForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycSystem {
    pub vars: Vec<String>,
    pub params: Vec<String>,
    pub rows: Vec<CycRow>,
}

/// A rational equation `coeffs·x = rhs(params)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatEquation {
    pub coeffs: Vec<Rat>,
    pub rhs: RatForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResolvedRestriction {
    pub multiplicities: BTreeMap<u32, RatForm>,
}

impl CycSystem {
    pub fn conductor(&self) -> u64 {
        let mut n = 1u64;
        for r in &self.rows {
            for c in r.coeffs.iter().chain(r.rhs.terms().values()).chain([r.rhs.constant_term()]) {
                n = n.lcm(&c.conductor());
            }
        }
        n
    }

    pub fn is_rational(&self) -> bool {
        self.conductor() == 1
    }

    pub fn to_rational(&self) -> Option<ParamSystem> {
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut rhs = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            rows.push(r.coeffs.iter().map(CycValue::as_rational).collect::<Option<Vec<_>>>()?);
            rhs.push(r.rhs.to_rational()?);
        }
        let a = RatMatrix::from_rows(rows, self.vars.len()).ok()?;
        ParamSystem::new(self.vars.clone(), self.params.clone(), a, rhs).ok()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vars": self.vars,
            "params": self.params,
            "rows": self.rows.iter().map(|r| json!({
                "sub_class": r.sub_class,
                "parent_class": r.parent_class,
                "coeffs": r.coeffs.iter().map(CycValue::to_json).collect::<Vec<_>>(),
                "rhs": r.rhs.to_json(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, String> {
        let strings = |key: &str| -> Result<Vec<String>, String> {
            serde_json::from_value(v.get(key).cloned().unwrap_or(Value::Array(vec![]))).map_err(|e| format!("{key}: {e}"))
        };
        let vars = strings("vars")?;
        let params = strings("params")?;
        let rows = v
            .get("rows")
            .and_then(Value::as_array)
            .ok_or("missing rows")?
            .iter()
            .map(|r| {
                let name = |key: &str| r.get(key).and_then(Value::as_str).map(str::to_string).ok_or(format!("row without {key}"));
                let coeffs = r
                    .get("coeffs")
                    .and_then(Value::as_array)
                    .ok_or("row without coeffs")?
                    .iter()
                    .map(|c| CycValue::from_json(c).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                if coeffs.len() != vars.len() {
                    return Err(format!("row of width {} for {} variables", coeffs.len(), vars.len()));
                }
                let rhs = CycForm::from_json(r.get("rhs").ok_or("row without rhs")?)?;
                Ok(CycRow { sub_class: name("sub_class")?, parent_class: name("parent_class")?, coeffs, rhs })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(CycSystem { vars, params, rows })
    }
}

/// One equation per subgroup class whose parent class carries a target value;
/// rows follow slice class order, columns follow `allowed`.
pub fn build_system(sc: &RestrictionScenario, vars: Vec<String>) -> Result<CycSystem, RestrictionError> {
    for id in &sc.allowed {
        sc.sub.character(*id).map_err(|_| RestrictionError::NotAllowed(*id))?;
    }
    let mut hit: BTreeMap<&str, bool> = sc.targets.keys().map(|k| (k.as_str(), false)).collect();
    let mut rows = Vec::new();
    for class in &sc.sub.classes {
        let Some(target) = sc.fusion.map.get(&class.name) else { continue };
        let cands = target.candidates();
        if cands.len() > 1 {
            if cands.iter().any(|c| sc.targets.contains_key(*c)) {
                sc.fusion.image(&class.name)?;
            }
            continue;
        }
        let parent = cands[0];
        let Some(rhs) = sc.targets.get(parent) else { continue };
        hit.insert(parent, true);
        let coeffs = sc
            .allowed
            .iter()
            .map(|&id| sc.sub.value(id, &class.name).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(CycRow { sub_class: class.name.clone(), parent_class: parent.to_string(), coeffs, rhs: rhs.clone() });
    }
    if let Some((c, _)) = hit.iter().find(|(_, h)| !**h) {
        return Err(RestrictionError::TargetNotHit(c.to_string()));
    }
    Ok(CycSystem { vars, params: sc.params.clone(), rows })
}

fn row_vector(eq: &RatEquation, params: &[String]) -> Vec<Rat> {
    let mut v = eq.coeffs.clone();
    v.extend(params.iter().map(|p| eq.rhs.coeff(p)));
    v.push(eq.rhs.constant_term().clone());
    v
}

/// Scaled so that the first nonzero entry is 1.
fn normalised(v: &[Rat]) -> Option<Vec<Rat>> {
    let lead = v.iter().find(|x| !x.is_zero())?.clone();
    Some(v.iter().map(|x| x / &lead).collect())
}

fn all_params(sys_params: &[String], eq: &RatEquation) -> Vec<String> {
    let mut ps: Vec<String> = sys_params.to_vec();
    for p in eq.rhs.params() {
        if !ps.iter().any(|q| q == p) {
            ps.push(p.to_string());
        }
    }
    ps
}

fn cyc_coords(x: &CycValue, n: u64, prime: bool) -> Result<Vec<Rat>, CycError> {
    if prime {
        expand_primitive_basis(x, n)
    } else {
        x.basis_coefficients(n)
    }
}

/// Coordinate equations of one cyclotomic equation over the basis of `Q(ζ_n)`.
fn coordinate_equations(coeffs: &[CycValue], rhs: &CycForm, n: u64, prime: bool) -> Result<Vec<RatEquation>, CycError> {
    let width = if prime { n as usize - 1 } else { basis_exponents(n).len() };
    let cols: Vec<Vec<Rat>> = coeffs.iter().map(|c| cyc_coords(c, n, prime)).collect::<Result<_, _>>()?;
    let konst = cyc_coords(rhs.constant_term(), n, prime)?;
    let terms: Vec<(String, Vec<Rat>)> = rhs
        .terms()
        .iter()
        .map(|(p, c)| Ok((p.clone(), cyc_coords(c, n, prime)?)))
        .collect::<Result<_, CycError>>()?;
    Ok((0..width)
        .map(|e| {
            let mut f = RatForm::constant(konst[e].clone());
            for (p, v) in &terms {
                f.add_term(p, v[e].clone());
            }
            RatEquation { coeffs: cols.iter().map(|c| c[e].clone()).collect(), rhs: f }
        })
        .collect())
}

/// Splits an equation over `ζ_n, …, ζ_n^(n-1)` for prime `n`; exact duplicates
/// (up to scaling) and `0 = 0` rows are dropped, first occurrences kept.
pub fn split_cyclotomic(coeffs: &[CycValue], rhs: &CycForm, n: u64) -> Result<Vec<RatEquation>, CycError> {
    let eqs = coordinate_equations(coeffs, rhs, n, true)?;
    Ok(dedup_scaled(eqs, &[]))
}

fn dedup_scaled(eqs: Vec<RatEquation>, params: &[String]) -> Vec<RatEquation> {
    let ps = eqs.iter().fold(params.to_vec(), |acc, eq| all_params(&acc, eq));
    let mut seen: Vec<Vec<Rat>> = Vec::new();
    let mut out = Vec::new();
    for eq in eqs {
        let Some(key) = normalised(&row_vector(&eq, &ps)) else { continue };
        if !seen.contains(&key) {
            seen.push(key);
            out.push(eq);
        }
    }
    out
}

fn to_param_system(vars: &[String], params: &[String], eqs: Vec<RatEquation>) -> Result<ParamSystem, FeasError> {
    let n = vars.len();
    let (rows, rhs): (Vec<Vec<Rat>>, Vec<RatForm>) = eqs.into_iter().map(|e| (e.coeffs, e.rhs)).unzip();
    let a = RatMatrix::from_rows(rows, n)?;
    ParamSystem::new(vars.to_vec(), params.to_vec(), a, rhs)
}

/// Splits every row of a system over the prime conductor `n`, deduplicating across rows.
pub fn split_system(sys: &CycSystem, n: u64) -> Result<ParamSystem, RestrictionError> {
    let mut eqs = Vec::new();
    for r in &sys.rows {
        eqs.extend(coordinate_equations(&r.coeffs, &r.rhs, n, true)?);
    }
    Ok(to_param_system(&sys.vars, &sys.params, dedup_scaled(eqs, &sys.params))?)
}

/// Replaces every irrational row by its coordinate equations over the basis of
/// its own conductor, keeping only rows that enlarge the span of those already kept.
pub fn rationalize(sys: &CycSystem) -> Result<ParamSystem, RestrictionError> {
    let mut kept: Vec<RatEquation> = Vec::new();
    let mut span: Vec<Vec<Rat>> = Vec::new();
    let width = sys.vars.len() + sys.params.len() + 1;
    for r in &sys.rows {
        let n = r.coeffs.iter().chain(r.rhs.terms().values()).chain([r.rhs.constant_term()]).fold(1u64, |n, c| n.lcm(&c.conductor()));
        let eqs = if n == 1 {
            vec![RatEquation {
                coeffs: r.coeffs.iter().map(|c| c.as_rational().expect("rational row")).collect(),
                rhs: r.rhs.to_rational().expect("rational row"),
            }]
        } else {
            coordinate_equations(&r.coeffs, &r.rhs, n, false)?
        };
        for eq in eqs {
            let v = row_vector(&eq, &sys.params);
            if v.iter().all(Zero::is_zero) {
                continue;
            }
            let mut trial = span.clone();
            trial.push(v.clone());
            let m = RatMatrix::from_rows(trial, width).expect("rectangular");
            if rref(&m).rank > span.len() {
                span.push(v);
                kept.push(eq);
            }
        }
    }
    Ok(to_param_system(&sys.vars, &sys.params, kept)?)
}

fn restricted_value(sc: &RestrictionScenario, resolved: &ResolvedRestriction, class: &str) -> Result<CycForm, RestrictionError> {
    let mut acc = CycForm::zero();
    for &id in &sc.allowed {
        let m = resolved.multiplicities.get(&id).ok_or(RestrictionError::Unresolved(id))?;
        let v = sc.sub.value(id, class)?;
        acc = acc + m.map(|c| v.scale(c));
    }
    Ok(acc)
}

/// Value of the restricted character on the parent class, as a form with
/// cyclotomic coefficients; all subgroup classes fusing there must agree.
pub fn pin_form(sc: &RestrictionScenario, resolved: &ResolvedRestriction, parent_class: &str) -> Result<CycForm, RestrictionError> {
    let mut found: Option<(String, CycForm)> = None;
    for class in &sc.sub.classes {
        if sc.fusion.image(&class.name)? != Some(parent_class) {
            continue;
        }
        let v = restricted_value(sc, resolved, &class.name)?;
        match &found {
            None => found = Some((class.name.clone(), v)),
            Some((c0, v0)) if *v0 != v => {
                return Err(RestrictionError::Inconsistent {
                    parent: parent_class.to_string(),
                    first_class: c0.clone(),
                    first: v0.to_string(),
                    second_class: class.name.clone(),
                    second: v.to_string(),
                })
            }
            Some(_) => {}
        }
    }
    found.map(|(_, v)| v).ok_or_else(|| RestrictionError::TargetNotHit(parent_class.to_string()))
}

/// As [`pin_form`], requiring the cyclotomic parts to cancel.
pub fn pin_values(sc: &RestrictionScenario, resolved: &ResolvedRestriction, parent_class: &str) -> Result<RatForm, RestrictionError> {
    let f = pin_form(sc, resolved, parent_class)?;
    f.to_rational().ok_or_else(|| RestrictionError::Irrational(parent_class.to_string(), f.to_string()))
}

/// `Σ x_i·(ρ_i(c1) − ρ_i(c2)) = 0`, scaled so its first nonzero coefficient is positive.
pub fn equal_fusion_constraint(
    slice: &CharTableSlice,
    allowed: &[u32],
    class1: &str,
    class2: &str,
) -> Result<RatEquation, RestrictionError> {
    slice.class(class1)?;
    slice.class(class2)?;
    let mut coeffs = Vec::with_capacity(allowed.len());
    for &id in allowed {
        let d = slice.value(id, class1)? - slice.value(id, class2)?;
        let r = d.as_rational().ok_or_else(|| RestrictionError::Irrational(format!("{class1}-{class2}"), d.to_string()))?;
        coeffs.push(r);
    }
    if coeffs.iter().find(|c| !c.is_zero()).is_some_and(|c| *c < Rat::zero()) {
        coeffs = coeffs.into_iter().map(|c| -c).collect();
    }
    Ok(RatEquation { coeffs, rhs: RatForm::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartab::load_slice;
    use crate::rat::rat;
    use serde_json::json;

    fn slice() -> CharTableSlice {
        load_slice(&json!({
            "group": "S", "characteristic": 2,
            "classes": [{"name": "1A", "order": 1}, {"name": "3A", "order": 3}, {"name": "3B", "order": 3}],
            "power_maps": {"3": {"3A": "1A", "3B": "1A"}},
            "characters": [
                {"id": 1, "degree": 1, "values": {"1A": 1, "3A": 1, "3B": 1}},
                {"id": 2, "degree": 2, "values": {"1A": 2, "3A": -1, "3B": 2}}
            ]
        }))
        .unwrap()
    }

    fn scenario(targets: BTreeMap<String, CycForm>) -> RestrictionScenario {
        RestrictionScenario {
            parent: "G".into(),
            sub: slice(),
            fusion: FusionMap::from_json(&json!({"sub": "S", "parent": "G", "map": {"1A": "1A", "3A": "3X", "3B": "3X"}})).unwrap(),
            allowed: vec![1, 2],
            params: vec!["k".into()],
            targets,
        }
    }

    #[test]
    fn empty_targets_give_empty_system() {
        let sys = build_system(&scenario(BTreeMap::new()), vec!["x1".into(), "x2".into()]).unwrap();
        assert!(sys.rows.is_empty());
    }

    #[test]
    fn one_row_per_fused_class() {
        let targets = BTreeMap::from([
            ("1A".to_string(), CycForm::term("k", CycValue::int(3))),
            ("3X".to_string(), CycForm::zero()),
        ]);
        let sys = build_system(&scenario(targets), vec!["x1".into(), "x2".into()]).unwrap();
        assert_eq!(sys.rows.len(), 3);
        assert_eq!(sys.rows[0].coeffs, vec![CycValue::int(1), CycValue::int(2)]);
        assert_eq!(sys.rows[2].sub_class, "3B");
    }

    #[test]
    fn unmapped_target_is_an_error() {
        let targets = BTreeMap::from([("5A".to_string(), CycForm::zero())]);
        assert!(matches!(
            build_system(&scenario(targets), vec!["x1".into(), "x2".into()]),
            Err(RestrictionError::TargetNotHit(_))
        ));
    }

    #[test]
    fn pins_detect_inconsistency() {
        let sc = scenario(BTreeMap::new());
        let resolved = ResolvedRestriction {
            multiplicities: BTreeMap::from([(1, RatForm::param("k")), (2, RatForm::zero())]),
        };
        assert_eq!(pin_values(&sc, &resolved, "3X").unwrap(), RatForm::param("k"));
        let resolved = ResolvedRestriction {
            multiplicities: BTreeMap::from([(1, RatForm::zero()), (2, RatForm::param("k"))]),
        };
        assert!(matches!(pin_values(&sc, &resolved, "3X"), Err(RestrictionError::Inconsistent { .. })));
        assert_eq!(pin_values(&sc, &resolved, "1A").unwrap(), RatForm::term("k", rat(2)));
    }

    #[test]
    fn equal_fusion_examples() {
        let s = slice();
        let eq = equal_fusion_constraint(&s, &[1, 2], "3A", "3B").unwrap();
        assert_eq!(eq.coeffs, vec![rat(0), rat(3)]);
        let eq = equal_fusion_constraint(&s, &[1, 2], "3A", "3A").unwrap();
        assert!(eq.coeffs.iter().all(Zero::is_zero));
        let eq = equal_fusion_constraint(&s, &[1], "1A", "3B").unwrap();
        assert_eq!(eq.coeffs, vec![rat(0)]);
        assert!(equal_fusion_constraint(&s, &[1], "1A", "9Z").is_err());
    }

    #[test]
    fn split_examples() {
        let one = CycValue::one();
        let eqs = split_cyclotomic(&[one.clone(), CycValue::int(2)], &CycForm::constant(CycValue::int(5)), 31).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].coeffs, vec![rat(-1), rat(-2)]);
        let eqs = split_cyclotomic(&[CycValue::zero()], &CycForm::zero(), 31).unwrap();
        assert!(eqs.is_empty());
        assert!(split_cyclotomic(&[CycValue::zeta(7)], &CycForm::zero(), 31).is_err());
    }

    #[test]
    fn rationalize_keeps_independent_rows() {
        let i = CycValue::zeta(4);
        let sys = CycSystem {
            vars: vec!["x1".into(), "x2".into()],
            params: vec![],
            rows: vec![
                CycRow { sub_class: "a".into(), parent_class: "A".into(), coeffs: vec![CycValue::one(), i.clone()], rhs: CycForm::constant(CycValue::int(1)) },
                CycRow { sub_class: "b".into(), parent_class: "A".into(), coeffs: vec![CycValue::one(), -i], rhs: CycForm::constant(CycValue::int(1)) },
            ],
        };
        let r = rationalize(&sys).unwrap();
        assert_eq!(r.rows(), 2);
        assert_eq!(r.numeric_rhs().unwrap().len(), 2);
    }
}
