//! Sign and bound propagation over the reduced rows of a parametric system.
//!
//! Every unknown and every parameter is non-negative. The engine derives
//! bounds row by row, turns pairs of rows with opposite parametric sides into
//! parameter equalities, and stops at a contradiction or a fixpoint. The
//! resulting [`DeductionChain`] is replayed step by step by [`replay`].

use crate::linalg::{rref_with_transform, RatMatrix};
use crate::linform::RatForm;
use crate::rat::{serde_rat_opt, serde_rat_vec, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::ParamSystem;

const MAX_PASSES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    ForcedZero,
    ForcedEquality,
    ForcedBound,
    Contradiction,
}

/// `Σ coeffs[j]·vars[j] = rhs(params)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRow {
    #[serde(with = "serde_rat_vec")]
    pub coeffs: Vec<Rat>,
    pub rhs: RatForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarBound {
    pub var: String,
    #[serde(with = "serde_rat_opt", default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Rat>,
    #[serde(with = "serde_rat_opt", default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    Bounds(Vec<VarBound>),
    Equality { param: String, value: RatForm },
    /// `var` (or the whole left-hand side when `var` is absent) is confined to an empty interval.
    Empty {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        var: Option<String>,
        #[serde(with = "serde_rat_opt", default, skip_serializing_if = "Option::is_none")]
        lower: Option<Rat>,
        #[serde(with = "serde_rat_opt", default, skip_serializing_if = "Option::is_none")]
        upper: Option<Rat>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub premises: Vec<usize>,
    pub conclusion: Conclusion,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductionChain {
    pub vars: Vec<String>,
    pub params: Vec<String>,
    pub rows: Vec<ChainRow>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Contradiction,
    /// Every unknown is an explicit form in the surviving parameters.
    Determined {
        values: BTreeMap<String, RatForm>,
        relations: BTreeMap<String, RatForm>,
    },
    Residual {
        relations: BTreeMap<String, RatForm>,
        fixed: BTreeMap<String, RatForm>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Propagation {
    pub chain: DeductionChain,
    pub outcome: Outcome,
}

/// Working state over `z = (vars, params)`; rows read `Σ c·z = d`.
#[derive(Clone)]
struct State {
    n: usize,
    names: Vec<String>,
    rows: Vec<(Vec<Rat>, Rat)>,
    lo: Vec<Rat>,
    hi: Vec<Option<Rat>>,
    eliminated: Vec<bool>,
    relations: BTreeMap<String, RatForm>,
}

fn add_opt(a: Option<Rat>, b: Option<Rat>) -> Option<Rat> {
    Some(a? + b?)
}

impl State {
    fn new(chain: &DeductionChain) -> Self {
        let n = chain.vars.len();
        let names: Vec<String> = chain.vars.iter().chain(&chain.params).cloned().collect();
        let width = names.len();
        let rows = chain
            .rows
            .iter()
            .map(|r| {
                let mut c = r.coeffs.clone();
                c.resize(n, Rat::zero());
                for p in &chain.params {
                    c.push(-r.rhs.coeff(p));
                }
                (c, r.rhs.constant_term().clone())
            })
            .collect();
        State {
            n,
            names,
            rows,
            lo: vec![Rat::zero(); width],
            hi: vec![None; width],
            eliminated: vec![false; width],
            relations: BTreeMap::new(),
        }
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|x| x == name)
    }

    /// Range of `Σ_{l ∉ skip} c_l z_l` over the current box.
    fn range(&self, row: &[Rat], skip: Option<usize>) -> (Option<Rat>, Option<Rat>) {
        let (mut min, mut max) = (Some(Rat::zero()), Some(Rat::zero()));
        for (l, c) in row.iter().enumerate() {
            if Some(l) == skip || c.is_zero() {
                continue;
            }
            let at_lo = c * &self.lo[l];
            let at_hi = self.hi[l].as_ref().map(|h| c * h);
            if c.is_positive() {
                min = add_opt(min, Some(at_lo));
                max = add_opt(max, at_hi);
            } else {
                min = add_opt(min, at_hi);
                max = add_opt(max, Some(at_lo));
            }
        }
        (min, max)
    }

    /// Interval for `z_j` implied by one row alone.
    fn implied(&self, i: usize, j: usize) -> (Option<Rat>, Option<Rat>) {
        let (row, d) = &self.rows[i];
        let c = &row[j];
        let (smin, smax) = self.range(row, Some(j));
        // c·z_j ∈ [d − smax, d − smin]
        let a = smax.map(|s| d - s);
        let b = smin.map(|s| d - s);
        if c.is_positive() {
            (a.map(|x| x / c), b.map(|x| x / c))
        } else {
            (b.map(|x| x / c), a.map(|x| x / c))
        }
    }

    fn fixed_value(&self, j: usize) -> Option<&Rat> {
        self.hi[j].as_ref().filter(|h| **h == self.lo[j])
    }

    /// Splits row `i` into its free-unknown part and its parametric side
    /// `f(params)`, substituting unknowns whose value is pinned.
    fn sides(&self, i: usize) -> (Vec<(usize, Rat)>, RatForm) {
        let (row, d) = &self.rows[i];
        let mut xs = Vec::new();
        let mut f = RatForm::constant(d.clone());
        for (j, c) in row.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if j < self.n {
                match self.fixed_value(j) {
                    Some(v) => f = f - RatForm::constant(c * v),
                    None => xs.push((j, c.clone())),
                }
            } else {
                f.add_term(&self.names[j], -c.clone());
            }
        }
        (xs, f)
    }

    /// Row `i` normalised so that its free unknowns have non-negative
    /// coefficients, if that is possible.
    fn signed_sides(&self, i: usize) -> Option<(Vec<(usize, Rat)>, RatForm)> {
        let (xs, f) = self.sides(i);
        if xs.iter().all(|(_, c)| !c.is_negative()) {
            Some((xs, f))
        } else if xs.iter().all(|(_, c)| !c.is_positive()) {
            Some((xs.into_iter().map(|(j, c)| (j, -c)).collect(), -f))
        } else {
            None
        }
    }

    fn tighten(&mut self, j: usize, lower: Option<&Rat>, upper: Option<&Rat>) {
        if let Some(l) = lower {
            if *l > self.lo[j] {
                self.lo[j] = l.clone();
            }
        }
        if let Some(u) = upper {
            if self.hi[j].as_ref().is_none_or(|h| u < h) {
                self.hi[j] = Some(u.clone());
            }
        }
    }

    fn substitute(&mut self, param: &str, value: &RatForm) {
        let p = self.index(param).expect("known parameter");
        for (row, d) in &mut self.rows {
            let c = std::mem::replace(&mut row[p], Rat::zero());
            if c.is_zero() {
                continue;
            }
            *d -= &c * value.constant_term();
            for (q, g) in value.terms() {
                let qi = self.names.iter().position(|x| x == q).expect("known parameter");
                row[qi] += &c * g;
            }
        }
        self.eliminated[p] = true;
        for v in self.relations.values_mut() {
            *v = v.substitute(param, value);
        }
        self.relations.insert(param.to_string(), value.clone());
    }
}

fn fmt_opt(x: &Option<Rat>) -> String {
    x.as_ref().map_or("inf".to_string(), |r| r.to_string())
}

fn describe_bounds(bounds: &[VarBound]) -> String {
    let zeros: Vec<&str> = bounds
        .iter()
        .filter(|b| b.upper.as_ref().is_some_and(Zero::is_zero))
        .map(|b| b.var.as_str())
        .collect();
    if !zeros.is_empty() && zeros.len() == bounds.len() {
        return format!("{} = 0", zeros.join(" = "));
    }
    bounds
        .iter()
        .map(|b| match (&b.lower, &b.upper) {
            (Some(l), Some(u)) if l == u => format!("{} = {l}", b.var),
            (Some(l), Some(u)) => format!("{l} <= {} <= {u}", b.var),
            (Some(l), None) => format!("{} >= {l}", b.var),
            (None, Some(u)) => format!("{} <= {u}", b.var),
            (None, None) => b.var.clone(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Solves `f = 0` for the last declared parameter occurring in `f`.
fn solve_for_last(f: &RatForm, order: &[String]) -> Option<(String, RatForm)> {
    let p = order.iter().rev().find(|p| !f.coeff(p).is_zero())?;
    let c = f.coeff(p);
    let rest = f.clone() - RatForm::term(p, c.clone());
    Some((p.clone(), rest.scale(&(-Rat::one() / c))))
}

/// Reduced rows of `[A | rhs]`; zero rows with a zero right-hand side are dropped.
pub fn reduced_rows(sys: &ParamSystem) -> Vec<ChainRow> {
    let (res, t) = rref_with_transform(&sys.a, sys.a.cols());
    (0..sys.rows())
        .filter_map(|i| {
            let rhs = t
                .row(i)
                .iter()
                .zip(&sys.rhs)
                .fold(RatForm::zero(), |acc, (c, f)| acc + f.scale(c));
            let coeffs = res.rref.row(i).to_vec();
            if coeffs.iter().all(Zero::is_zero) && rhs.is_zero() {
                None
            } else {
                Some(ChainRow { coeffs, rhs })
            }
        })
        .collect()
}

pub fn propagate(sys: &ParamSystem) -> Propagation {
    let chain = DeductionChain {
        vars: sys.vars.clone(),
        params: sys.params.clone(),
        rows: reduced_rows(sys),
        steps: vec![],
    };
    run(chain)
}

/// Runs the engine on explicit starting rows.
pub fn run(mut chain: DeductionChain) -> Propagation {
    let mut st = State::new(&chain);
    let mut steps = Vec::new();
    let contradiction = 'outer: {
        for _ in 0..MAX_PASSES {
            let mut progress = false;
            for i in 0..st.rows.len() {
                let mut found = Vec::new();
                for j in 0..st.names.len() {
                    if st.rows[i].0[j].is_zero() || st.eliminated[j] {
                        continue;
                    }
                    let (l, u) = st.implied(i, j);
                    let lower = l.filter(|l| *l > st.lo[j]);
                    let upper = u.filter(|u| st.hi[j].as_ref().is_none_or(|h| u < h));
                    let eff_lo = lower.clone().unwrap_or_else(|| st.lo[j].clone());
                    let eff_hi = upper.clone().or_else(|| st.hi[j].clone());
                    if eff_hi.as_ref().is_some_and(|h| *h < eff_lo) {
                        let text = format!(
                            "{} lies in [{}, {}], which is empty",
                            st.names[j],
                            eff_lo,
                            fmt_opt(&eff_hi)
                        );
                        steps.push(Step {
                            rule: Rule::Contradiction,
                            premises: vec![i],
                            conclusion: Conclusion::Empty {
                                var: Some(st.names[j].clone()),
                                lower: Some(eff_lo),
                                upper: eff_hi,
                            },
                            text,
                        });
                        break 'outer true;
                    }
                    if lower.is_some() || upper.is_some() {
                        found.push(VarBound { var: st.names[j].clone(), lower, upper });
                    }
                }
                let (smin, smax) = st.range(&st.rows[i].0, None);
                let d = &st.rows[i].1;
                if smin.as_ref().is_some_and(|m| m > d) || smax.as_ref().is_some_and(|m| m < d) {
                    steps.push(Step {
                        rule: Rule::Contradiction,
                        premises: vec![i],
                        conclusion: Conclusion::Empty { var: None, lower: smin.clone(), upper: smax.clone() },
                        text: format!("left-hand side lies in [{}, {}] but must equal {d}", fmt_opt(&smin), fmt_opt(&smax)),
                    });
                    break 'outer true;
                }
                if found.is_empty() {
                    continue;
                }
                progress = true;
                let (zeros, others): (Vec<VarBound>, Vec<VarBound>) = found
                    .into_iter()
                    .partition(|b| b.upper.as_ref().is_some_and(Zero::is_zero));
                for (rule, group) in [(Rule::ForcedZero, zeros), (Rule::ForcedBound, others)] {
                    if group.is_empty() {
                        continue;
                    }
                    for b in &group {
                        let j = st.index(&b.var).unwrap();
                        st.tighten(j, b.lower.as_ref(), b.upper.as_ref());
                    }
                    let text = describe_bounds(&group);
                    steps.push(Step { rule, premises: vec![i], conclusion: Conclusion::Bounds(group), text });
                }
            }
            if progress {
                continue;
            }
            if let Some((premises, param, value)) = find_equality(&st, &chain.params) {
                let text = format!("{param} = {value}");
                st.substitute(&param, &value);
                steps.push(Step {
                    rule: Rule::ForcedEquality,
                    premises,
                    conclusion: Conclusion::Equality { param, value },
                    text,
                });
                continue;
            }
            break;
        }
        false
    };
    chain.steps = steps;
    let outcome = if contradiction { Outcome::Contradiction } else { summarise(&st) };
    Propagation { chain, outcome }
}

fn find_equality(st: &State, order: &[String]) -> Option<(Vec<usize>, String, RatForm)> {
    let sides: Vec<_> = (0..st.rows.len()).map(|i| st.signed_sides(i)).collect();
    for (i, s) in sides.iter().enumerate() {
        if let Some((xs, f)) = s {
            if xs.is_empty() && !f.is_constant() {
                let (p, v) = solve_for_last(f, order)?;
                return Some((vec![i], p, v));
            }
        }
    }
    for i in 0..sides.len() {
        let Some((_, fi)) = &sides[i] else { continue };
        if fi.is_constant() {
            continue;
        }
        for (k, other) in sides.iter().enumerate().skip(i + 1) {
            let Some((_, fk)) = other else { continue };
            if (fi.clone() + fk.clone()).is_zero() {
                let (p, v) = solve_for_last(fi, order)?;
                return Some((vec![i, k], p, v));
            }
        }
    }
    None
}

fn summarise(st: &State) -> Outcome {
    let n = st.n;
    let mut fixed = BTreeMap::new();
    let mut free = Vec::new();
    for j in 0..n {
        match st.fixed_value(j) {
            Some(v) => {
                fixed.insert(st.names[j].clone(), RatForm::constant(v.clone()));
            }
            None => free.push(j),
        }
    }
    let rows: Vec<(Vec<Rat>, RatForm)> = (0..st.rows.len())
        .map(|i| {
            let (xs, f) = st.sides(i);
            let mut c = vec![Rat::zero(); free.len()];
            for (j, v) in xs {
                c[free.iter().position(|&x| x == j).unwrap()] = v;
            }
            (c, f)
        })
        .collect();
    let m = RatMatrix::from_rows(rows.iter().map(|r| r.0.clone()).collect(), free.len()).expect("rectangular");
    let (res, t) = rref_with_transform(&m, free.len());
    let forms: Vec<RatForm> = (0..m.rows())
        .map(|i| t.row(i).iter().zip(&rows).fold(RatForm::zero(), |acc, (c, r)| acc + r.1.scale(c)))
        .collect();
    let leftover = (res.rank..m.rows()).any(|i| !forms[i].is_zero());
    if res.rank == free.len() && !leftover {
        let mut values = fixed;
        for (i, &p) in res.pivots.iter().enumerate() {
            values.insert(st.names[free[p]].clone(), forms[i].clone());
        }
        Outcome::Determined { values, relations: st.relations.clone() }
    } else {
        Outcome::Residual { relations: st.relations.clone(), fixed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub contradiction: bool,
    pub outcome: Outcome,
}

/// Re-checks every step of a chain from its rows; fails on the first step not
/// implied by the state reached so far.
pub fn replay(chain: &DeductionChain) -> Result<Replay, String> {
    let n = chain.vars.len();
    if chain.rows.iter().any(|r| r.coeffs.len() != n) {
        return Err("row width does not match the variable list".into());
    }
    let mut st = State::new(chain);
    for (s, step) in chain.steps.iter().enumerate() {
        let err = |m: String| format!("step {}: {m}", s + 1);
        if step.premises.iter().any(|&i| i >= st.rows.len()) {
            return Err(err("premise row out of range".into()));
        }
        match (&step.rule, &step.conclusion) {
            (Rule::ForcedZero | Rule::ForcedBound, Conclusion::Bounds(bounds)) => {
                let [i] = step.premises[..] else {
                    return Err(err("bound steps take one premise row".into()));
                };
                for b in bounds {
                    let j = st.index(&b.var).ok_or_else(|| err(format!("unknown variable {}", b.var)))?;
                    if st.eliminated[j] || st.rows[i].0[j].is_zero() {
                        return Err(err(format!("{} does not occur in row {i}", b.var)));
                    }
                    if step.rule == Rule::ForcedZero && !b.upper.as_ref().is_some_and(Zero::is_zero) {
                        return Err(err(format!("{} is not forced to zero", b.var)));
                    }
                    let (l, u) = st.implied(i, j);
                    if let Some(cl) = &b.lower {
                        if !l.as_ref().is_some_and(|l| cl <= l) {
                            return Err(err(format!("lower bound {cl} for {} is not implied", b.var)));
                        }
                    }
                    if let Some(cu) = &b.upper {
                        if !u.as_ref().is_some_and(|u| cu >= u) {
                            return Err(err(format!("upper bound {cu} for {} is not implied", b.var)));
                        }
                    }
                }
                for b in bounds {
                    let j = st.index(&b.var).unwrap();
                    st.tighten(j, b.lower.as_ref(), b.upper.as_ref());
                }
            }
            (Rule::ForcedEquality, Conclusion::Equality { param, value }) => {
                let p = st.index(param).filter(|&p| p >= n && !st.eliminated[p]);
                if p.is_none() || value.params().any(|q| q == param) {
                    return Err(err(format!("{param} cannot be eliminated")));
                }
                let sides: Vec<_> = step.premises.iter().map(|&i| st.signed_sides(i)).collect();
                let f = match &sides[..] {
                    [Some((xs, f))] if xs.is_empty() => f.clone(),
                    [Some((_, f)), Some((_, g))] if (f.clone() + g.clone()).is_zero() => f.clone(),
                    _ => return Err(err("premises do not force a parameter relation".into())),
                };
                let residue = f.substitute(param, value);
                if !residue.is_zero() || f.coeff(param).is_zero() {
                    return Err(err(format!("{param} = {value} does not follow from the premises")));
                }
                st.substitute(param, value);
            }
            (Rule::Contradiction, Conclusion::Empty { var, .. }) => {
                let [i] = step.premises[..] else {
                    return Err(err("contradiction steps take one premise row".into()));
                };
                match var {
                    Some(v) => {
                        let j = st.index(v).ok_or_else(|| err(format!("unknown variable {v}")))?;
                        let (l, u) = st.implied(i, j);
                        let lo = l.into_iter().chain([st.lo[j].clone()]).max().unwrap();
                        let hi = match (u, st.hi[j].clone()) {
                            (Some(a), Some(b)) => Some(a.min(b)),
                            (a, b) => a.or(b),
                        };
                        if !hi.as_ref().is_some_and(|h| *h < lo) {
                            return Err(err(format!("interval for {v} is not empty")));
                        }
                    }
                    None => {
                        let (smin, smax) = st.range(&st.rows[i].0, None);
                        let d = &st.rows[i].1;
                        if !(smin.as_ref().is_some_and(|m| m > d) || smax.as_ref().is_some_and(|m| m < d)) {
                            return Err(err("row is satisfiable within the current bounds".into()));
                        }
                    }
                }
                if s + 1 != chain.steps.len() {
                    return Err(err("steps follow a contradiction".into()));
                }
                return Ok(Replay { contradiction: true, outcome: Outcome::Contradiction });
            }
            _ => return Err(err("rule and conclusion do not match".into())),
        }
    }
    Ok(Replay { contradiction: false, outcome: summarise(&st) })
}

/// True iff the chain's rows span the same equations as the system.
pub fn rows_match_system(chain: &DeductionChain, sys: &ParamSystem) -> bool {
    if chain.vars != sys.vars || chain.params != sys.params {
        return false;
    }
    let expand = |coeffs: &[Rat], f: &RatForm| {
        let mut v = coeffs.to_vec();
        v.extend(sys.params.iter().map(|p| f.coeff(p)));
        v.push(f.constant_term().clone());
        v
    };
    let width = sys.cols() + sys.params.len() + 1;
    let ours: Vec<Vec<Rat>> = chain.rows.iter().map(|r| expand(&r.coeffs, &r.rhs)).collect();
    let theirs: Vec<Vec<Rat>> = (0..sys.rows()).map(|i| expand(sys.a.row(i), &sys.rhs[i])).collect();
    match (RatMatrix::from_rows(ours, width), RatMatrix::from_rows(theirs, width)) {
        (Ok(x), Ok(y)) => crate::linalg::row_space_equal(&x, &y).unwrap_or(false),
        _ => false,
    }
}

/// Checks that `values` satisfy the system identically in the parameters,
/// after applying `relations`.
pub fn check_determined(sys: &ParamSystem, values: &BTreeMap<String, RatForm>, relations: &BTreeMap<String, RatForm>) -> bool {
    let mut xs = Vec::with_capacity(sys.cols());
    for v in &sys.vars {
        match values.get(v) {
            Some(f) => xs.push(f.clone()),
            None => return false,
        }
    }
    (0..sys.rows()).all(|i| {
        let lhs = sys.a.row(i).iter().zip(&xs).fold(RatForm::zero(), |acc, (c, f)| acc + f.scale(c));
        let mut diff = lhs - sys.rhs[i].clone();
        for (p, val) in relations {
            diff = diff.substitute(p, val);
        }
        diff.is_zero()
    })
}
