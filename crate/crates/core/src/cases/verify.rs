//! Independent re-checking of a certificate report against the fixtures.
//!
//! Nothing here re-solves a system: certificates, witnesses and deduction
//! chains are checked as given. Only an integer infeasibility claim without a
//! rational certificate is re-enumerated.

use super::report::*;
use super::runner::{
    derive_rational, equal_fusion_system, expectation_checks, final_verdict, fpf_report, graph_summary, resolve, rref_report,
    sha256_hex, solve_instance, solve_outcome, var_names, Fixtures,
};
use super::spec::{Allowed, Directive, Expectation, LoadedCase, SolveSpec, StageSpec, Target};
use super::CaseError;
use crate::chartab::{validate_fusion, ParentData};
use crate::feasibility::propagate::{check_determined, rows_match_system};
use crate::feasibility::{
    check_witness, nonneg_integer_feasible, replay, verify_verdict, FeasVerdict, IntVerdict, Outcome, ParamSystem,
};
use crate::linform::{CycForm, RatForm};
use crate::rat::is_integral;
use crate::restriction::{build_system, pin_form, CycSystem, ResolvedRestriction, RestrictionScenario};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerifyOutcome {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl VerifyOutcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, cond: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !cond {
            self.failures.push(what());
        }
    }
}

pub fn verify_report_str(text: &str, case: &LoadedCase) -> Result<VerifyOutcome, CaseError> {
    let r = CertificateReport::from_json_str(text).map_err(|e| CaseError::Parse { path: "report".into(), message: e.to_string() })?;
    Ok(verify_report(&r, case))
}

pub fn verify_report(r: &CertificateReport, case: &LoadedCase) -> VerifyOutcome {
    let mut out = VerifyOutcome::default();
    if let Err(e) = verify_into(r, case, &mut out) {
        out.failures.push(format!("could not re-check: {e}"));
    }
    out
}

fn verify_into(r: &CertificateReport, case: &LoadedCase, out: &mut VerifyOutcome) -> Result<(), CaseError> {
    let spec = &case.spec;
    out.check(r.case == spec.name, || format!("report is for case {}, not {}", r.case, spec.name));
    out.check(r.group == spec.group && r.characteristic == spec.characteristic, || "group or characteristic differs".into());
    out.check(r.assumptions == spec.assumptions, || "assumptions differ from the case file".into());

    for (rel, h) in &r.fixtures {
        let now = super::spec::read_text(&case.root, rel).map(|t| sha256_hex(t.as_bytes()));
        out.check(now.as_deref() == Ok(h.as_str()), || format!("fixture {rel} does not match its recorded hash"));
    }
    let mut required: Vec<&str> = vec![&case.file, &spec.orders, &spec.parent_classes];
    required.extend(spec.stages.iter().map(String::as_str));
    for st in case.stages.iter().take(r.stages.len()) {
        required.extend([st.sub_slice.as_str(), st.fusion.as_str()]);
        let e = &st.expect;
        required.extend([&e.built_system, &e.rational_system, &e.rref].into_iter().flatten().map(String::as_str));
    }
    for rel in required {
        out.check(r.fixtures.contains_key(rel), || format!("fixture {rel} is not pinned by a hash"));
    }

    let mut fx = Fixtures::new(&case.root);
    let orders = fx.orders(&spec.orders)?;
    let graph = graph_summary(&spec.orders, &orders, &spec.fixed_point_free_orders)?;
    out.check(graph == r.prime_graph, || "prime graph summary does not match the order list".into());

    out.check(r.stages.len() <= case.stages.len(), || "report has more stages than the case".into());
    for (i, (got, want)) in r.stages.iter().zip(&case.stages).enumerate() {
        out.check(got.name == want.name, || format!("stage {} is {}, the case lists {}", i + 1, got.name, want.name));
    }

    let index: BTreeMap<&str, usize> = r.stages.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
    for f in &r.facts {
        let producer = index.get(f.stage.as_str()).map(|&i| &r.stages[i]);
        let ok = producer.is_some_and(|s| s.produces.iter().any(|p| p.new && p.class == f.class && p.value == f.value));
        out.check(ok, || format!("fact at {} is not produced by stage {}", f.class, f.stage));
    }
    for (i, st) in r.stages.iter().enumerate() {
        for c in &st.uses {
            let j = r.fact(c).and_then(|f| index.get(f.stage.as_str()).copied());
            out.check(j.is_some_and(|j| j < i), || format!("stage {} uses the value at {c} before it is produced", st.name));
        }
        for p in st.produces.iter().filter(|p| !p.new) {
            let j = r.fact(&p.class).and_then(|f| index.get(f.stage.as_str()).copied());
            out.check(j.is_some_and(|j| j < i), || format!("stage {} confirms {} without an earlier value", st.name, p.class));
        }
    }
    for rel in &r.relations {
        let ok = match index.get(rel.stage.as_str()) {
            None => false,
            Some(&i) => relation_justified(&r.stages[i], &case.stages[i.min(case.stages.len() - 1)], rel),
        };
        out.check(ok, || format!("relation {} = {} is not justified by stage {}", rel.param, rel.value, rel.stage));
    }

    let parent = fx.slice(&spec.parent_classes)?;
    for (st, sspec) in r.stages.iter().zip(&case.stages) {
        verify_stage(r, st, sspec, &parent, &mut fx, out)?;
    }

    let complete = r.stages.len() == case.stages.len() && r.stages.iter().all(|s| s.error.is_none());
    let last = final_verdict(&r.stages, complete);
    out.check(last == r.last_stage_infeasible, || "final verdict does not follow from the last stage".into());
    out.check(r.verdict == if last { LAST_INFEASIBLE } else { NOT_EXCLUDED }, || "verdict text is inconsistent".into());
    out.check(r.expected_verdict == spec.expected_verdict.as_str(), || "expected verdict differs from the case file".into());
    let pass = (last == (spec.expected_verdict == Expectation::Infeasible))
        && r.stages.iter().all(|s| s.pass)
        && r.prime_graph.hypotheses.iter().all(|h| h.isolated);
    out.check(pass == r.pass, || "report pass flag is inconsistent".into());
    Ok(())
}

fn relation_justified(st: &StageReport, spec: &StageSpec, rel: &RelationRecord) -> bool {
    let from_solve = st.solves.iter().any(|s| match s.propagation.as_ref().map(|p| &p.outcome) {
        Some(Outcome::Determined { relations, .. }) => relations.get(&rel.param) == Some(&rel.value),
        _ => false,
    });
    let from_identify = spec.post.iter().any(|d| match d {
        Directive::Identify(i) => i.params.contains(&rel.param) && rel.value == RatForm::param(&i.target),
        _ => false,
    });
    from_solve || from_identify
}

fn verify_stage(
    r: &CertificateReport,
    st: &StageReport,
    spec: &StageSpec,
    parent: &crate::chartab::CharTableSlice,
    fx: &mut Fixtures<'_>,
    out: &mut VerifyOutcome,
) -> Result<(), CaseError> {
    let name = &st.name;
    let slice = fx.slice(&spec.sub_slice)?;
    let fusion = fx.fusion(&spec.fusion)?;
    let fc = validate_fusion(&fusion, &slice, ParentData::Slice(parent))
        .map_err(|e| CaseError::Fixture { path: spec.fusion.clone(), message: e.to_string() })?;
    out.check(fc == st.fusion_check, || format!("{name}: fusion check differs"));

    let allowed = match &spec.allowed {
        Allowed::All => slice.character_ids(),
        Allowed::Ids(ids) => ids.clone(),
        Allowed::Fpf(n) => {
            let f = fpf_report(&slice, *n)?;
            out.check(st.fpf.as_ref() == Some(&f), || format!("{name}: fixed-point counts differ"));
            f.survivors
        }
    };
    if st.error.is_some() {
        return Ok(());
    }
    out.check(allowed == st.allowed, || format!("{name}: allowed characters differ"));
    let degrees: Vec<u64> = allowed.iter().filter_map(|&id| slice.character(id).ok().map(|c| c.degree)).collect();
    out.check(degrees == st.allowed_degrees, || format!("{name}: allowed degrees differ"));
    out.check(var_names(&slice, &allowed, spec.var_names).ok().as_ref() == Some(&st.vars), || format!("{name}: variable names differ"));

    let full = |f: &CycForm| resolve(f, &r.relations);
    let built = match &st.built_system {
        None => {
            out.check(spec.targets.is_empty(), || format!("{name}: targets given but no system recorded"));
            None
        }
        Some(v) => match CycSystem::from_json(v) {
            Err(e) => {
                out.check(false, || format!("{name}: built system does not parse: {e}"));
                None
            }
            Ok(sys) => {
                let mut targets: BTreeMap<String, CycForm> = BTreeMap::new();
                for row in &sys.rows {
                    let prev = targets.insert(row.parent_class.clone(), row.rhs.clone());
                    out.check(prev.is_none_or(|p| p == row.rhs), || format!("{name}: rows for {} disagree", row.parent_class));
                }
                for (class, t) in &spec.targets {
                    let want = match t {
                        Target::Fact(c) => r.fact(c).map(|f| full(&f.value)),
                        Target::Form(f) => Some(full(f)),
                    };
                    let got = targets.get(class).map(&full);
                    out.check(want.is_some() && got == want, || format!("{name}: target at {class} does not match its source"));
                }
                let sc = RestrictionScenario {
                    parent: spec.parent.clone(),
                    sub: slice.clone(),
                    fusion: fusion.clone(),
                    allowed: allowed.clone(),
                    params: sys.params.clone(),
                    targets,
                };
                let rebuilt = build_system(&sc, st.vars.clone());
                out.check(rebuilt.as_ref() == Ok(&sys), || format!("{name}: built system does not follow from the table"));
                Some(sys)
            }
        },
    };

    if let (Some(d), Some(sys)) = (&st.derivation, &st.rational_system) {
        let again = match d.get("equal_fusion").and_then(|v| v.as_array()) {
            Some(cs) => {
                let c: Vec<&str> = cs.iter().filter_map(|x| x.as_str()).collect();
                match c[..] {
                    [c1, c2] => equal_fusion_system(&slice, &fusion, &allowed, &st.vars, c1, c2).ok(),
                    _ => None,
                }
            }
            None => derive_rational(built.as_ref(), d).ok().flatten(),
        };
        out.check(again.as_ref() == Some(sys), || format!("{name}: rational system does not follow from its derivation"));
    }

    let solve_specs: Vec<&SolveSpec> = spec
        .post
        .iter()
        .filter_map(|d| match d {
            Directive::Solve(s) => Some(s),
            _ => None,
        })
        .collect();
    out.check(solve_specs.len() == st.solves.len(), || format!("{name}: number of solves differs from the stage file"));
    for (sv, ss) in st.solves.iter().zip(&solve_specs) {
        verify_solve(name, st.rational_system.as_ref(), sv, ss, out);
    }
    if let Some(last) = st.solves.last() {
        out.check(st.rref.as_ref() == Some(&rref_report(&last.instance)), || format!("{name}: reduced form does not recompute"));
    } else if let Some(sys) = &st.rational_system {
        out.check(st.rref.as_ref() == Some(&rref_report(sys)), || format!("{name}: reduced form does not recompute"));
    }

    if let Some(m) = &spec.multiplicities {
        for (id, p) in allowed.iter().zip(&m.free) {
            let ok = st.resolved.get(id).is_some_and(|f| resolve(f, &r.relations) == resolve(&RatForm::param(p), &r.relations));
            out.check(ok, || format!("{name}: multiplicity of character {id} is not {p}"));
        }
    }
    for sv in &st.solves {
        if let Some(Outcome::Determined { values, .. }) = sv.propagation.as_ref().map(|p| &p.outcome) {
            for (id, var) in allowed.iter().zip(&st.vars) {
                let ok = match (st.resolved.get(id), values.get(var)) {
                    (Some(a), Some(b)) => resolve(a, &r.relations) == resolve(b, &r.relations),
                    _ => false,
                };
                out.check(ok, || format!("{name}: multiplicity of {var} does not match the determined solution"));
            }
        }
    }
    let rational_pins: BTreeSet<&String> = spec
        .post
        .iter()
        .flat_map(|d| match d {
            Directive::Pin(c) => c.iter().collect(),
            _ => vec![],
        })
        .collect();
    let sc = RestrictionScenario {
        parent: spec.parent.clone(),
        sub: slice.clone(),
        fusion: fusion.clone(),
        allowed: allowed.clone(),
        params: vec![],
        targets: BTreeMap::new(),
    };
    let res = ResolvedRestriction { multiplicities: st.resolved.iter().map(|(id, f)| (*id, resolve(f, &r.relations))).collect() };
    for p in &st.produces {
        let again = pin_form(&sc, &res, &p.class).map(|f| full(&f));
        out.check(again.as_ref() == Ok(&full(&p.value)), || format!("{name}: value at {} does not recompute", p.class));
        if rational_pins.contains(&p.class) {
            out.check(p.value.to_rational().is_some(), || format!("{name}: value at {} is not rational", p.class));
        }
    }

    let expectations = expectation_checks(spec, st, &slice, &mut |p| fx.value(p))?;
    out.check(expectations == st.expectations, || format!("{name}: expectation results do not recompute"));
    let pass = st.error.is_none() && expectations.iter().all(|e| e.pass) && st.solves.iter().all(|s| s.pass);
    out.check(pass == st.pass, || format!("{name}: stage pass flag is inconsistent"));
    Ok(())
}

fn rational_refutes(v: &FeasVerdict, inst: &ParamSystem) -> bool {
    let Ok(b) = inst.numeric_rhs() else { return false };
    let valid = verify_verdict(&inst.a, &b, v).unwrap_or(false);
    valid
        && match v {
            FeasVerdict::Feasible { .. } => false,
            FeasVerdict::Infeasible { .. } => true,
            FeasVerdict::InfeasibleNontrivial { .. } => inst.nontrivial,
        }
}

fn verify_solve(name: &str, rational: Option<&ParamSystem>, sv: &SolveReport, ss: &SolveSpec, out: &mut VerifyOutcome) {
    let inst = &sv.instance;
    let again = rational.and_then(|sys| solve_instance(sys, ss.scale, ss.nontrivial).ok());
    out.check(again.as_ref() == Some(inst), || format!("{name}: solved instance does not follow from the rational system"));
    out.check(sv.system_hash == inst.hash(), || format!("{name}: system hash mismatch"));
    out.check(sv.scaled == ss.scale && sv.bound_row == ss.bound_row, || format!("{name}: solve options differ from the stage file"));
    out.check(sv.expect == ss.expect.as_str(), || format!("{name}: solve expectation differs from the stage file"));

    if let Some(v) = &sv.rational {
        let ok = match inst.numeric_rhs() {
            Err(_) => false,
            Ok(b) => {
                verify_verdict(&inst.a, &b, v).unwrap_or(false)
                    && match v {
                        FeasVerdict::InfeasibleNontrivial { .. } => inst.nontrivial,
                        FeasVerdict::Feasible { witness } => !inst.nontrivial || witness.iter().any(|x| !x.is_zero()),
                        FeasVerdict::Infeasible { .. } => true,
                    }
            }
        };
        out.check(ok, || format!("{name}: rational certificate does not verify"));
    }
    if let Some(v) = &sv.integer {
        let ok = match v {
            IntVerdict::Feasible { witness } => {
                inst.numeric_rhs().is_ok_and(|b| check_witness(&inst.a, &b, witness))
                    && witness.iter().all(is_integral)
                    && (!inst.nontrivial || witness.iter().any(|x| !x.is_zero()))
            }
            IntVerdict::Infeasible { bound_row, .. } => {
                Some(*bound_row) == ss.bound_row
                    && (sv.rational.as_ref().is_some_and(|rv| rational_refutes(rv, inst))
                        || nonneg_integer_feasible(inst, &BTreeMap::new(), *bound_row).is_ok_and(|w| !w.is_feasible()))
            }
        };
        out.check(ok, || format!("{name}: integer verdict does not verify"));
    }
    if let Some(p) = &sv.propagation {
        out.check(rows_match_system(&p.chain, inst), || format!("{name}: deduction chain rows do not span the system"));
        match replay(&p.chain) {
            Err(e) => out.check(false, || format!("{name}: deduction chain fails: {e}")),
            Ok(rp) => {
                out.check(rp.outcome == p.outcome && rp.contradiction == (p.outcome == Outcome::Contradiction), || {
                    format!("{name}: replayed chain reaches a different outcome")
                });
                if let Outcome::Determined { values, relations } = &p.outcome {
                    out.check(check_determined(inst, values, relations), || format!("{name}: determined values do not solve the system"));
                }
            }
        }
    }
    let outcome = solve_outcome(sv);
    out.check(outcome.as_deref() == Ok(sv.outcome.as_str()), || format!("{name}: solve outcome does not follow from the methods"));
    out.check(sv.pass == (sv.outcome == sv.expect), || format!("{name}: solve pass flag is inconsistent"));
}
