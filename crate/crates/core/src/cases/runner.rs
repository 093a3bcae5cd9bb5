//! Executes a case stage by stage.

use super::report::*;
use super::spec::{Allowed, Directive, Expectation, LoadedCase, Method, SolveSpec, StageSpec, Target, VarNames};
use super::CaseError;
use crate::chartab::{fixed_point_count, fpf_filter, load_slice, validate_fusion, CharTableSlice, FusionMap, OrderList, ParentData};
use crate::cyclotomic::{is_prime, CycValue};
use crate::feasibility::{
    nonneg_integer_feasible, nonneg_rational_feasible, propagate, reduced_rows, scale_reduce, FeasVerdict, IntVerdict, Outcome,
    ParamSystem,
};
use crate::linalg::{rref, RatMatrix};
use crate::linform::{LinForm, RatForm, Scalar};
use crate::primegraph::build_graph;
use crate::rat::serde_rat;
use crate::restriction::{
    build_system, equal_fusion_constraint, pin_form, pin_values, rationalize, split_system, CycSystem, ResolvedRestriction,
    RestrictionError, RestrictionScenario,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Reads fixture files relative to a root, remembering the hash of each.
pub(crate) struct Fixtures<'a> {
    root: &'a Path,
    pub hashes: BTreeMap<String, String>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl<'a> Fixtures<'a> {
    pub fn new(root: &'a Path) -> Self {
        Fixtures { root, hashes: BTreeMap::new() }
    }

    pub fn value(&mut self, rel: &str) -> Result<Value, CaseError> {
        let text = super::spec::read_text(self.root, rel)?;
        self.hashes.insert(rel.to_string(), sha256_hex(text.as_bytes()));
        serde_json::from_str(&text).map_err(|e| CaseError::Parse { path: rel.to_string(), message: e.to_string() })
    }

    pub fn slice(&mut self, rel: &str) -> Result<CharTableSlice, CaseError> {
        let v = self.value(rel)?;
        load_slice(&v).map_err(|e| CaseError::Fixture { path: rel.to_string(), message: e.to_string() })
    }

    pub fn fusion(&mut self, rel: &str) -> Result<FusionMap, CaseError> {
        let v = self.value(rel)?;
        FusionMap::from_json(&v).map_err(|e| CaseError::Fixture { path: rel.to_string(), message: e.to_string() })
    }

    pub fn orders(&mut self, rel: &str) -> Result<OrderList, CaseError> {
        let v = self.value(rel)?;
        OrderList::from_json(&v).map_err(|e| CaseError::Fixture { path: rel.to_string(), message: e.to_string() })
    }
}

fn prime_divisors(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| n.is_multiple_of(p) && is_prime(p)).collect()
}

pub(crate) fn graph_summary(rel: &str, orders: &OrderList, hypotheses: &[u64]) -> Result<GraphSummary, CaseError> {
    let g = build_graph(orders).map_err(|e| CaseError::Fixture { path: rel.to_string(), message: e.to_string() })?;
    let isolated = g.isolated();
    Ok(GraphSummary {
        orders: rel.to_string(),
        vertices: g.vertices.iter().copied().collect(),
        edges: g.edges.iter().copied().collect(),
        components: g.components().into_iter().map(|c| c.into_iter().collect()).collect(),
        isolated: isolated.iter().copied().collect(),
        hypotheses: hypotheses
            .iter()
            .map(|&o| {
                let primes = prime_divisors(o);
                let iso = !primes.is_empty() && primes.iter().all(|p| isolated.contains(p));
                IsolationCheck { order: o, primes, isolated: iso }
            })
            .collect(),
    })
}

/// Substitutes parameter relations until none applies.
pub(crate) fn resolve<T: Scalar>(f: &LinForm<T>, relations: &[RelationRecord]) -> LinForm<T> {
    let mut out = f.clone();
    for _ in 0..=relations.len() {
        let Some(r) = relations.iter().find(|r| out.params().any(|p| p == r.param)) else { break };
        out = out.substitute(&r.param, &r.value.map(|c| T::from(c.clone())));
    }
    out
}

pub(crate) fn var_names(slice: &CharTableSlice, allowed: &[u32], how: VarNames) -> Result<Vec<String>, CaseError> {
    let mut names = Vec::with_capacity(allowed.len());
    for &id in allowed {
        let c = slice.character(id).map_err(RestrictionError::from)?;
        let n = match how {
            VarNames::Id => format!("x{id}"),
            VarNames::Degree => format!("x{}", c.degree),
        };
        if names.contains(&n) {
            return Err(CaseError::Stage(format!("variable name {n} is not unique")));
        }
        names.push(n);
    }
    Ok(names)
}

pub fn fpf_report(slice: &CharTableSlice, order: u64) -> Result<FpfReport, RestrictionError> {
    let classes: Vec<String> = slice.classes.iter().filter(|c| c.order == order).map(|c| c.name.clone()).collect();
    let survivors = fpf_filter(slice, order)?;
    let mut counts = BTreeMap::new();
    for ch in &slice.characters {
        let row = classes
            .iter()
            .map(|c| fixed_point_count(slice, ch.id, c).map(|r| r.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        counts.insert(ch.id, row);
    }
    Ok(FpfReport { order, classes, counts, survivors })
}

pub(crate) fn rref_report(sys: &ParamSystem) -> RrefReport {
    let rows = reduced_rows(sys);
    RrefReport {
        a: rows.iter().map(|r| r.coeffs.clone()).collect(),
        rhs: rows.into_iter().map(|r| r.rhs).collect(),
        pivots: rref(&sys.a).pivots,
    }
}

pub(crate) fn equal_fusion_system(
    slice: &CharTableSlice,
    fusion: &FusionMap,
    allowed: &[u32],
    vars: &[String],
    c1: &str,
    c2: &str,
) -> Result<ParamSystem, RestrictionError> {
    if fusion.image(c1)?.is_none() || fusion.image(c1)? != fusion.image(c2)? {
        return Err(RestrictionError::NotFused(c1.to_string(), c2.to_string()));
    }
    let eq = equal_fusion_constraint(slice, allowed, c1, c2)?;
    let a = RatMatrix::from_rows(vec![eq.coeffs], vars.len()).map_err(crate::feasibility::FeasError::from)?;
    Ok(ParamSystem::new(vars.to_vec(), vec![], a, vec![eq.rhs])?)
}

/// Re-derives a rational system from its recorded derivation.
pub(crate) fn derive_rational(built: Option<&CycSystem>, derivation: &Value) -> Result<Option<ParamSystem>, RestrictionError> {
    let Some(built) = built else { return Ok(None) };
    if let Some(n) = derivation.get("split").and_then(Value::as_u64) {
        return split_system(built, n).map(Some);
    }
    if derivation.get("rationalize").is_some() {
        return rationalize(built).map(Some);
    }
    if derivation.get("from").and_then(Value::as_str) == Some("built") {
        return Ok(built.to_rational());
    }
    Ok(None)
}

pub(crate) fn solve_instance(sys: &ParamSystem, scale: bool, nontrivial: bool) -> Result<ParamSystem, crate::feasibility::FeasError> {
    let inst = if scale { scale_reduce(sys)? } else { sys.clone() };
    Ok(inst.with_nontrivial(nontrivial))
}

/// Names the joint conclusion of the methods that ran; `Err` when they disagree.
pub(crate) fn solve_outcome(r: &SolveReport) -> Result<&'static str, String> {
    let rational_feasible = r.rational.as_ref().map(FeasVerdict::is_feasible);
    let integer_feasible = r.integer.as_ref().map(IntVerdict::is_feasible);
    let contradiction = r.propagation.as_ref().is_some_and(|p| p.outcome == Outcome::Contradiction);
    let infeasible = rational_feasible == Some(false) || integer_feasible == Some(false) || contradiction;
    if integer_feasible == Some(true) && infeasible {
        return Err("an integer witness exists but another method reports infeasibility".into());
    }
    if rational_feasible == Some(true) && contradiction {
        return Err("propagation contradicts a rational witness".into());
    }
    Ok(if infeasible {
        "infeasible"
    } else if matches!(r.propagation.as_ref().map(|p| &p.outcome), Some(Outcome::Determined { .. })) {
        "determined"
    } else if rational_feasible == Some(true) || integer_feasible == Some(true) {
        "feasible"
    } else {
        "undecided"
    })
}

fn parse_cyc_matrix(v: &Value) -> Result<(Vec<Vec<CycValue>>, Vec<crate::linform::CycForm>), String> {
    let a = v
        .get("a")
        .and_then(Value::as_array)
        .ok_or("missing a")?
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or("row is not an array".to_string())?
                .iter()
                .map(|c| CycValue::from_json(c).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rhs = v
        .get("rhs")
        .and_then(Value::as_array)
        .ok_or("missing rhs")?
        .iter()
        .map(LinForm::from_json)
        .collect::<Result<Vec<_>, _>>()?;
    if a.len() != rhs.len() {
        return Err(format!("{} rows but {} right-hand sides", a.len(), rhs.len()));
    }
    Ok((a, rhs))
}

fn parse_rat_matrix(v: &Value) -> Result<(Vec<Vec<crate::rat::Rat>>, Vec<RatForm>), String> {
    let a = v
        .get("a")
        .and_then(Value::as_array)
        .ok_or("missing a")?
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or("row is not an array".to_string())?
                .iter()
                .map(|c| serde_rat::from_json(c).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rhs = v
        .get("rhs")
        .and_then(Value::as_array)
        .ok_or("missing rhs")?
        .iter()
        .map(RatForm::from_json)
        .collect::<Result<Vec<_>, _>>()?;
    if a.len() != rhs.len() {
        return Err(format!("{} rows but {} right-hand sides", a.len(), rhs.len()));
    }
    Ok((a, rhs))
}

fn compare_rows<T: PartialEq + std::fmt::Display, F: PartialEq + std::fmt::Display>(
    got: &[(Vec<T>, F)],
    want: &[(Vec<T>, F)],
    unordered: bool,
) -> (bool, String) {
    if got.len() != want.len() {
        return (false, format!("{} rows, expected {}", got.len(), want.len()));
    }
    if unordered {
        let mut used = vec![false; want.len()];
        for (i, g) in got.iter().enumerate() {
            match want.iter().enumerate().position(|(j, w)| !used[j] && w == g) {
                Some(j) => used[j] = true,
                None => return (false, format!("row {} has no counterpart", i + 1)),
            }
        }
        return (true, format!("{} rows match up to order", got.len()));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if g.0.len() != w.0.len() {
            return (false, format!("row {} has width {}, expected {}", i + 1, g.0.len(), w.0.len()));
        }
        if let Some(j) = (0..g.0.len()).find(|&j| g.0[j] != w.0[j]) {
            return (false, format!("row {} column {}: {} expected {}", i + 1, j + 1, g.0[j], w.0[j]));
        }
        if g.1 != w.1 {
            return (false, format!("row {} right-hand side: {} expected {}", i + 1, g.1, w.1));
        }
    }
    let width = got.first().map_or(0, |r| r.0.len());
    (true, format!("{}x{} matches", got.len(), width))
}

/// Compares stage artefacts with the expected fixture files.
pub(crate) fn expectation_checks(
    spec: &StageSpec,
    rep: &StageReport,
    slice: &CharTableSlice,
    load: &mut dyn FnMut(&str) -> Result<Value, CaseError>,
) -> Result<Vec<ExpectCheck>, CaseError> {
    let mut out = vec![ExpectCheck {
        name: "fusion".into(),
        pass: rep.fusion_check.valid,
        detail: if rep.fusion_check.valid { "consistent with parent classes".into() } else { rep.fusion_check.diagnostics.join("; ") },
    }];
    let e = &spec.expect;
    if let Some(d) = &e.allowed_degrees {
        out.push(ExpectCheck { name: "allowed_degrees".into(), pass: *d == rep.allowed_degrees, detail: format!("{:?}", rep.allowed_degrees) });
    }
    if let Some(ids) = &e.allowed_ids {
        out.push(ExpectCheck { name: "allowed_ids".into(), pass: *ids == rep.allowed, detail: format!("{:?}", rep.allowed) });
    }
    let _ = slice;
    if let Some(path) = &e.built_system {
        let (pass, detail) = match (rep.built_system.as_ref().map(CycSystem::from_json), parse_cyc_matrix(&load(path)?)) {
            (None, _) => (false, "no system was built".to_string()),
            (Some(Err(m)), _) | (_, Err(m)) => (false, m),
            (Some(Ok(sys)), Ok((a, rhs))) => {
                let got: Vec<_> = sys.rows.iter().map(|r| (r.coeffs.clone(), r.rhs.clone())).collect();
                let want: Vec<_> = a.into_iter().zip(rhs).collect();
                compare_rows(&got, &want, false)
            }
        };
        out.push(ExpectCheck { name: "built_system".into(), pass, detail: format!("{path}: {detail}") });
    }
    if let Some(path) = &e.rational_system {
        let (pass, detail) = match (&rep.rational_system, parse_rat_matrix(&load(path)?)) {
            (None, _) => (false, "no rational system".to_string()),
            (_, Err(m)) => (false, m),
            (Some(sys), Ok((a, rhs))) => {
                let got: Vec<_> = (0..sys.rows()).map(|i| (sys.a.row(i).to_vec(), sys.rhs[i].clone())).collect();
                let want: Vec<_> = a.into_iter().zip(rhs).collect();
                compare_rows(&got, &want, e.unordered)
            }
        };
        out.push(ExpectCheck { name: "rational_system".into(), pass, detail: format!("{path}: {detail}") });
    }
    if let Some(path) = &e.rref {
        let (pass, detail) = match (&rep.rref, parse_rat_matrix(&load(path)?)) {
            (None, _) => (false, "no reduced system".to_string()),
            (_, Err(m)) => (false, m),
            (Some(r), Ok((a, rhs))) => {
                let got: Vec<_> = r.a.iter().cloned().zip(r.rhs.iter().cloned()).collect();
                let want: Vec<_> = a.into_iter().zip(rhs).collect();
                compare_rows(&got, &want, false)
            }
        };
        out.push(ExpectCheck { name: "rref".into(), pass, detail: format!("{path}: {detail}") });
    }
    Ok(out)
}

struct CaseState {
    facts: Vec<FactRecord>,
    relations: Vec<RelationRecord>,
}

impl CaseState {
    fn record_fact(&mut self, stage: &str, class: &str, value: crate::linform::CycForm, rep: &mut StageReport) -> Result<(), CaseError> {
        let value = resolve(&value, &self.relations);
        if let Some(old) = self.facts.iter().find(|f| f.class == class) {
            let prev = resolve(&old.value, &self.relations);
            if prev != value {
                return Err(CaseError::Stage(format!(
                    "value {value} at {class} contradicts {prev} from stage {}",
                    old.stage
                )));
            }
            rep.produces.push(PinRecord { class: class.to_string(), value, new: false });
        } else {
            self.facts.push(FactRecord { class: class.to_string(), value: value.clone(), stage: stage.to_string() });
            rep.produces.push(PinRecord { class: class.to_string(), value, new: true });
        }
        Ok(())
    }

    fn add_relation(&mut self, param: &str, value: RatForm, stage: &str) {
        if !self.relations.iter().any(|r| r.param == param) {
            self.relations.push(RelationRecord { param: param.to_string(), value, stage: stage.to_string() });
        }
    }
}

struct StageRun<'a> {
    case: &'a LoadedCase,
    spec: &'a StageSpec,
    slice: CharTableSlice,
    fusion: FusionMap,
    built: Option<CycSystem>,
    scenario: Option<RestrictionScenario>,
    resolved: ResolvedRestriction,
}

impl StageRun<'_> {
    fn declared(&self, p: &str) -> Result<(), CaseError> {
        if self.case.spec.params.iter().any(|q| q == p) {
            Ok(())
        } else {
            Err(CaseError::Stage(format!("parameter {p} is not declared by the case")))
        }
    }

    fn resolved_now(&self, st: &CaseState) -> ResolvedRestriction {
        ResolvedRestriction {
            multiplicities: self.resolved.multiplicities.iter().map(|(id, f)| (*id, resolve(f, &st.relations))).collect(),
        }
    }

    fn execute(&mut self, st: &mut CaseState, rep: &mut StageReport) -> Result<(), CaseError> {
        let spec = self.spec;
        if self.fusion.parent != spec.parent || spec.parent != self.case.spec.group {
            return Err(CaseError::Stage(format!("fusion into {} used for a stage of {}", self.fusion.parent, spec.parent)));
        }
        rep.allowed = match &spec.allowed {
            Allowed::All => self.slice.character_ids(),
            Allowed::Ids(ids) => ids.clone(),
            Allowed::Fpf(n) => {
                let f = fpf_report(&self.slice, *n)?;
                let s = f.survivors.clone();
                rep.fpf = Some(f);
                s
            }
        };
        rep.allowed_degrees = rep
            .allowed
            .iter()
            .map(|&id| self.slice.character(id).map(|c| c.degree))
            .collect::<Result<_, _>>()
            .map_err(RestrictionError::from)?;
        rep.vars = var_names(&self.slice, &rep.allowed, spec.var_names)?;

        let mut targets = BTreeMap::new();
        for (class, t) in &spec.targets {
            let f = match t {
                Target::Fact(c) => {
                    let fact = st
                        .facts
                        .iter()
                        .find(|f| f.class == *c)
                        .ok_or_else(|| CaseError::Stage(format!("no earlier stage fixes the value at {c}")))?;
                    if !rep.uses.contains(c) {
                        rep.uses.push(c.clone());
                    }
                    fact.value.clone()
                }
                Target::Form(f) => f.clone(),
            };
            targets.insert(class.clone(), resolve(&f, &st.relations));
        }
        let mut used: BTreeSet<String> = BTreeSet::new();
        for f in targets.values() {
            for p in f.params() {
                self.declared(p)?;
                used.insert(p.to_string());
            }
        }
        let params: Vec<String> = self.case.spec.params.iter().filter(|p| used.contains(*p)).cloned().collect();
        let sc = RestrictionScenario {
            parent: spec.parent.clone(),
            sub: self.slice.clone(),
            fusion: self.fusion.clone(),
            allowed: rep.allowed.clone(),
            params,
            targets,
        };
        let mut rational: Option<ParamSystem> = None;
        if !sc.targets.is_empty() {
            let built = build_system(&sc, rep.vars.clone())?;
            rep.built_system = Some(built.to_json());
            if let Some(r) = built.to_rational() {
                rational = Some(r);
                rep.derivation = Some(json!({"from": "built"}));
            }
            self.built = Some(built);
        }
        self.scenario = Some(sc);
        if let Some(m) = &spec.multiplicities {
            if m.free.len() != rep.allowed.len() {
                return Err(CaseError::Stage(format!(
                    "{} free multiplicities for {} allowed characters",
                    m.free.len(),
                    rep.allowed.len()
                )));
            }
            for p in &m.free {
                self.declared(p)?;
            }
            self.resolved.multiplicities = rep.allowed.iter().zip(&m.free).map(|(id, p)| (*id, RatForm::param(p))).collect();
        }

        for d in &spec.post {
            match d {
                Directive::Pin(classes) | Directive::PinCyclotomic(classes) => {
                    let sc = self.scenario.as_ref().expect("scenario set");
                    let res = self.resolved_now(st);
                    for c in classes {
                        let v = match d {
                            Directive::Pin(_) => pin_values(sc, &res, c)?.to_cyc(),
                            _ => pin_form(sc, &res, c)?,
                        };
                        st.record_fact(&spec.name, c, v, rep)?;
                    }
                }
                Directive::Split(n) => {
                    let built = self.built.as_ref().ok_or_else(|| CaseError::Stage("split needs a built system".into()))?;
                    rational = Some(split_system(built, *n)?);
                    rep.derivation = Some(json!({"split": n}));
                }
                Directive::Rationalize(_) => {
                    let built = self.built.as_ref().ok_or_else(|| CaseError::Stage("rationalize needs a built system".into()))?;
                    rational = Some(rationalize(built)?);
                    rep.derivation = Some(json!({"rationalize": true}));
                }
                Directive::EqualFusion([c1, c2]) => {
                    rational = Some(equal_fusion_system(&self.slice, &self.fusion, &rep.allowed, &rep.vars, c1, c2)?);
                    rep.derivation = Some(json!({"equal_fusion": [c1, c2]}));
                }
                Directive::Solve(s) => {
                    let sys = rational.as_ref().ok_or_else(|| CaseError::Stage("nothing to solve".into()))?;
                    let sv = self.solve(sys, s)?;
                    if let Some(Outcome::Determined { values, relations }) = sv.propagation.as_ref().map(|p| &p.outcome) {
                        for (p, v) in relations {
                            st.add_relation(p, v.clone(), &spec.name);
                        }
                        for (id, var) in rep.allowed.iter().zip(&rep.vars) {
                            self.resolved.multiplicities.insert(*id, values[var].clone());
                        }
                    }
                    rep.rref = Some(rref_report(&sv.instance));
                    rep.solves.push(sv);
                }
                Directive::Identify(idf) => {
                    self.declared(&idf.target)?;
                    for p in &idf.params {
                        self.declared(p)?;
                        if *p != idf.target {
                            st.add_relation(p, RatForm::param(&idf.target), &spec.name);
                        }
                    }
                }
            }
        }
        if rep.rref.is_none() {
            rep.rref = rational.as_ref().map(rref_report);
        }
        rep.rational_system = rational;
        rep.resolved = self.resolved_now(st).multiplicities;
        Ok(())
    }

    fn solve(&self, sys: &ParamSystem, s: &SolveSpec) -> Result<SolveReport, CaseError> {
        let inst = solve_instance(sys, s.scale, s.nontrivial)?;
        let none = BTreeMap::new();
        let numeric = |m: Method| -> Result<(), CaseError> {
            if inst.params.is_empty() {
                Ok(())
            } else {
                Err(CaseError::Stage(format!("{m:?} solving needs a system without parameters")))
            }
        };
        let mut r = SolveReport {
            system_hash: inst.hash(),
            scaled: s.scale,
            bound_row: s.bound_row,
            rational: None,
            integer: None,
            propagation: None,
            outcome: String::new(),
            expect: s.expect.as_str().to_string(),
            pass: false,
            instance: inst.clone(),
        };
        for &m in &s.methods {
            match m {
                Method::Rational => {
                    numeric(m)?;
                    r.rational = Some(nonneg_rational_feasible(&inst, &none)?);
                }
                Method::Integer => {
                    numeric(m)?;
                    let row = s.bound_row.ok_or_else(|| CaseError::Stage("integer solving needs bound_row".into()))?;
                    r.integer = Some(nonneg_integer_feasible(&inst, &none, row)?);
                }
                Method::Propagate => r.propagation = Some(propagate(&inst)),
            }
        }
        r.outcome = solve_outcome(&r).map_err(CaseError::Stage)?.to_string();
        r.pass = r.outcome == s.expect.as_str();
        Ok(r)
    }
}

pub fn run_case(case: &LoadedCase) -> Result<CertificateReport, CaseError> {
    let mut fx = Fixtures::new(&case.root);
    fx.value(&case.file)?;
    for s in &case.spec.stages {
        fx.value(s)?;
    }
    let orders = fx.orders(&case.spec.orders)?;
    let prime_graph = graph_summary(&case.spec.orders, &orders, &case.spec.fixed_point_free_orders)?;
    let parent = fx.slice(&case.spec.parent_classes)?;

    let mut st = CaseState { facts: vec![], relations: vec![] };
    let mut stages = Vec::new();
    let mut complete = true;
    for spec in &case.stages {
        let slice = fx.slice(&spec.sub_slice)?;
        let fusion = fx.fusion(&spec.fusion)?;
        let fusion_check = validate_fusion(&fusion, &slice, ParentData::Slice(&parent))
            .map_err(|e| CaseError::Fixture { path: spec.fusion.clone(), message: e.to_string() })?;
        let mut rep = StageReport {
            name: spec.name.clone(),
            parent: spec.parent.clone(),
            sub: slice.group.clone(),
            fusion_check,
            fpf: None,
            allowed: vec![],
            allowed_degrees: vec![],
            vars: vec![],
            uses: vec![],
            produces: vec![],
            built_system: None,
            rational_system: None,
            derivation: None,
            rref: None,
            solves: vec![],
            resolved: BTreeMap::new(),
            expectations: vec![],
            error: None,
            pass: false,
        };
        let mut run = StageRun {
            case,
            spec,
            slice,
            fusion,
            built: None,
            scenario: None,
            resolved: ResolvedRestriction::default(),
        };
        match run.execute(&mut st, &mut rep) {
            Ok(()) => {}
            Err(e @ (CaseError::Io { .. } | CaseError::Parse { .. } | CaseError::Fixture { .. })) => return Err(e),
            Err(e) => rep.error = Some(e.to_string()),
        }
        rep.expectations = expectation_checks(spec, &rep, &run.slice, &mut |p| fx.value(p))?;
        rep.pass = rep.error.is_none() && rep.expectations.iter().all(|e| e.pass) && rep.solves.iter().all(|s| s.pass);
        let failed = rep.error.is_some();
        stages.push(rep);
        if failed {
            complete = false;
            break;
        }
    }
    Ok(finish(case, fx.hashes, prime_graph, stages, st, complete))
}

pub(crate) fn final_verdict(stages: &[StageReport], complete: bool) -> bool {
    complete
        && stages.last().and_then(|s| s.solves.last()).is_some_and(|s| s.outcome == Expectation::Infeasible.as_str())
}

fn finish(
    case: &LoadedCase,
    fixtures: BTreeMap<String, String>,
    prime_graph: GraphSummary,
    stages: Vec<StageReport>,
    st: CaseState,
    complete: bool,
) -> CertificateReport {
    let last = final_verdict(&stages, complete);
    let expected = case.spec.expected_verdict;
    let pass = (last == (expected == Expectation::Infeasible))
        && stages.iter().all(|s| s.pass)
        && prime_graph.hypotheses.iter().all(|h| h.isolated);
    CertificateReport {
        case: case.spec.name.clone(),
        group: case.spec.group.clone(),
        characteristic: case.spec.characteristic,
        fixtures,
        prime_graph,
        assumptions: case.spec.assumptions.clone(),
        stages,
        facts: st.facts,
        relations: st.relations,
        last_stage_infeasible: last,
        verdict: if last { LAST_INFEASIBLE } else { NOT_EXCLUDED }.to_string(),
        expected_verdict: expected.as_str().to_string(),
        pass,
    }
}
