//! Non-negative rational and integer feasibility of `A·x = b` with
//! self-checking certificates.

mod integer;
pub mod propagate;
mod simplex;
mod system;

pub use propagate::{propagate, reduced_rows, replay, DeductionChain, Outcome, Propagation, Rule, Step};
pub use system::ParamSystem;

use crate::linalg::{LinalgError, RatMatrix};
use crate::linform::RatForm;
use crate::rat::{serde_rat_vec, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeasError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parameter error: {0}")]
    Param(String),
    #[error("invalid bound row: {0}")]
    BoundRow(String),
    #[error("malformed system: {0}")]
    Format(String),
}

impl From<LinalgError> for FeasError {
    fn from(e: LinalgError) -> Self {
        FeasError::Dimension(e.to_string())
    }
}

/// Dual vector `y` with `yᵀA ≥ 0` and `yᵀb < 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarkasCert {
    #[serde(with = "serde_rat_vec")]
    pub y: Vec<Rat>,
}

/// A Farkas certificate for the strengthening `x_var ≥ 1`, i.e. for `A·x' = b − A·e_var`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrengthenedCert {
    pub var: usize,
    #[serde(with = "serde_rat_vec")]
    pub y: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FeasVerdict {
    Feasible {
        #[serde(with = "serde_rat_vec")]
        witness: Vec<Rat>,
    },
    Infeasible {
        farkas: FarkasCert,
    },
    /// Only the zero vector is feasible; one certificate per strengthened variable.
    InfeasibleNontrivial {
        certificates: Vec<StrengthenedCert>,
    },
}

impl FeasVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasVerdict::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum IntVerdict {
    Feasible {
        #[serde(with = "serde_rat_vec")]
        witness: Vec<Rat>,
    },
    /// Exhaustive search of `0 ≤ x ≤ upper` found nothing.
    Infeasible {
        bound_row: usize,
        upper: Vec<String>,
        nodes: u64,
    },
}

impl IntVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, IntVerdict::Feasible { .. })
    }
}

pub fn verify_farkas(a: &RatMatrix, b: &[Rat], cert: &FarkasCert) -> Result<bool, FeasError> {
    if b.len() != a.rows() || cert.y.len() != a.rows() {
        return Err(FeasError::Dimension(format!(
            "{} rows, {} right-hand sides, certificate of length {}",
            a.rows(),
            b.len(),
            cert.y.len()
        )));
    }
    let ya = a.left_mul_vec(&cert.y)?;
    let yb = crate::linalg::dot(&cert.y, b);
    Ok(ya.iter().all(|v| !v.is_negative()) && yb.is_negative())
}

/// Checks a witness by substitution.
pub fn check_witness(a: &RatMatrix, b: &[Rat], x: &[Rat]) -> bool {
    x.len() == a.cols() && x.iter().all(|v| !v.is_negative()) && a.mul_vec(x).is_ok_and(|ax| ax == b)
}

fn strengthened_rhs(a: &RatMatrix, b: &[Rat], j: usize) -> Vec<Rat> {
    b.iter().enumerate().map(|(i, v)| v - a.get(i, j)).collect()
}

pub fn verify_nontrivial(a: &RatMatrix, b: &[Rat], certs: &[StrengthenedCert]) -> Result<bool, FeasError> {
    let mut covered = vec![false; a.cols()];
    for c in certs {
        if c.var >= a.cols() {
            return Ok(false);
        }
        if !verify_farkas(a, &strengthened_rhs(a, b, c.var), &FarkasCert { y: c.y.clone() })? {
            return Ok(false);
        }
        covered[c.var] = true;
    }
    Ok(covered.into_iter().all(|c| c))
}

/// Decides `A·x = b, x ≥ 0` by exact phase-one simplex.
pub fn decide_rational(a: &RatMatrix, b: &[Rat]) -> Result<FeasVerdict, FeasError> {
    if b.len() != a.rows() {
        return Err(FeasError::Dimension(format!("{} right-hand sides for {} rows", b.len(), a.rows())));
    }
    Ok(match simplex::phase_one(a, b) {
        simplex::LpOutcome::Feasible(witness) => FeasVerdict::Feasible { witness },
        simplex::LpOutcome::Infeasible(y) => FeasVerdict::Infeasible { farkas: FarkasCert { y } },
    })
}

pub fn nonneg_rational_feasible(s: &ParamSystem, at: &BTreeMap<String, Rat>) -> Result<FeasVerdict, FeasError> {
    let b = s.instantiate(at)?;
    if !s.nontrivial {
        return decide_rational(&s.a, &b);
    }
    let mut certificates = Vec::with_capacity(s.cols());
    for j in 0..s.cols() {
        match decide_rational(&s.a, &strengthened_rhs(&s.a, &b, j))? {
            FeasVerdict::Feasible { mut witness } => {
                witness[j] += Rat::one();
                return Ok(FeasVerdict::Feasible { witness });
            }
            FeasVerdict::Infeasible { farkas } => certificates.push(StrengthenedCert { var: j, y: farkas.y }),
            FeasVerdict::InfeasibleNontrivial { .. } => unreachable!("plain decisions are never nontrivial"),
        }
    }
    Ok(FeasVerdict::InfeasibleNontrivial { certificates })
}

/// Re-checks any rational verdict against the instantiated system.
pub fn verify_verdict(a: &RatMatrix, b: &[Rat], v: &FeasVerdict) -> Result<bool, FeasError> {
    match v {
        FeasVerdict::Feasible { witness } => Ok(check_witness(a, b, witness)),
        FeasVerdict::Infeasible { farkas } => verify_farkas(a, b, farkas),
        FeasVerdict::InfeasibleNontrivial { certificates } => verify_nontrivial(a, b, certificates),
    }
}

pub fn nonneg_integer_feasible(s: &ParamSystem, at: &BTreeMap<String, Rat>, bound_row: usize) -> Result<IntVerdict, FeasError> {
    let b = s.instantiate(at)?;
    let r = integer::search(&s.a, &b, bound_row, s.nontrivial)?;
    Ok(match r.witness {
        Some(witness) => IntVerdict::Feasible { witness },
        None => IntVerdict::Infeasible { bound_row, upper: r.upper.iter().map(BigInt::to_string).collect(), nodes: r.nodes },
    })
}

/// The `k = 1` instance of a system whose right-hand side is homogeneous in one parameter.
pub fn scale_reduce(s: &ParamSystem) -> Result<ParamSystem, FeasError> {
    if s.rhs.iter().all(RatForm::is_zero) {
        let mut out = s.clone();
        out.params.clear();
        return Ok(out);
    }
    let [k] = &s.params[..] else {
        return Err(FeasError::Param(format!("expected one parameter, found {}", s.params.len())));
    };
    if let Some(i) = s.rhs.iter().position(|f| !f.constant_term().is_zero()) {
        return Err(FeasError::Param(format!("right-hand side of row {i} is not homogeneous in {k}")));
    }
    let rhs = s.rhs.iter().map(|f| RatForm::constant(f.coeff(k))).collect();
    Ok(ParamSystem { rhs, params: vec![], ..s.clone() })
}

/// Convenience: the unique parameter assignment `{k: 1}`-style map.
pub fn assignment(pairs: &[(&str, i64)]) -> BTreeMap<String, Rat> {
    pairs.iter().map(|(k, v)| (k.to_string(), crate::rat::rat(*v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn numeric(rows: &[&[i64]], b: &[i64]) -> ParamSystem {
        ParamSystem::numeric(RatMatrix::from_i64(rows), b.iter().map(|&x| rat(x)).collect()).unwrap()
    }

    #[test]
    fn rational_examples() {
        let s = numeric(&[&[1, 1]], &[-1]);
        let v = nonneg_rational_feasible(&s, &BTreeMap::new()).unwrap();
        assert_eq!(v, FeasVerdict::Infeasible { farkas: FarkasCert { y: vec![rat(1)] } });
        let s = numeric(&[&[1, 0], &[0, 1]], &[3, 0]);
        let v = nonneg_rational_feasible(&s, &BTreeMap::new()).unwrap();
        assert_eq!(v, FeasVerdict::Feasible { witness: vec![rat(3), rat(0)] });
    }

    #[test]
    fn farkas_checks() {
        let a = RatMatrix::from_i64(&[&[1, 1]]);
        assert!(verify_farkas(&a, &[rat(-1)], &FarkasCert { y: vec![rat(1)] }).unwrap());
        assert!(!verify_farkas(&a, &[rat(1)], &FarkasCert { y: vec![rat(1)] }).unwrap());
        assert!(verify_farkas(&a, &[rat(1)], &FarkasCert { y: vec![] }).is_err());
    }

    #[test]
    fn integer_examples() {
        let s = numeric(&[&[2, 3]], &[6]);
        let v = nonneg_integer_feasible(&s, &BTreeMap::new(), 0).unwrap();
        let IntVerdict::Feasible { witness } = v else { panic!("expected feasible") };
        assert!(witness == vec![rat(3), rat(0)] || witness == vec![rat(0), rat(2)]);
        let s = numeric(&[&[4, 28, 36]], &[0]).with_nontrivial(true);
        assert!(!nonneg_integer_feasible(&s, &BTreeMap::new(), 0).unwrap().is_feasible());
        let s = numeric(&[&[1, -1]], &[0]);
        assert!(matches!(nonneg_integer_feasible(&s, &BTreeMap::new(), 0), Err(FeasError::BoundRow(_))));
    }

    #[test]
    fn nontrivial_rational() {
        let s = numeric(&[&[4, 28, 36]], &[0]).with_nontrivial(true);
        let v = nonneg_rational_feasible(&s, &BTreeMap::new()).unwrap();
        assert!(verify_verdict(&s.a, &[rat(0)], &v).unwrap());
        assert!(matches!(v, FeasVerdict::InfeasibleNontrivial { ref certificates } if certificates.len() == 3));
        let s = numeric(&[&[1, -1]], &[0]).with_nontrivial(true);
        let v = nonneg_rational_feasible(&s, &BTreeMap::new()).unwrap();
        assert_eq!(v, FeasVerdict::Feasible { witness: vec![rat(1), rat(1)] });
    }

    #[test]
    fn scale_reduction() {
        let a = RatMatrix::from_i64(&[&[1, 2], &[3, 4]]);
        let rhs = vec![RatForm::term("k", rat(22)), RatForm::term("k", rat(-2))];
        let s = ParamSystem::new(vec!["x1".into(), "x2".into()], vec!["k".into()], a.clone(), rhs).unwrap();
        let r = scale_reduce(&s).unwrap();
        assert_eq!(r.numeric_rhs().unwrap(), vec![rat(22), rat(-2)]);
        let zero = ParamSystem::numeric(a.clone(), vec![rat(0), rat(0)]).unwrap();
        assert_eq!(scale_reduce(&zero).unwrap(), zero);
        let bad = ParamSystem::new(
            vec!["x1".into(), "x2".into()],
            vec!["k".into()],
            a,
            vec![RatForm::param("k") + RatForm::constant(rat(1)), RatForm::zero()],
        )
        .unwrap();
        assert!(scale_reduce(&bad).is_err());
    }

    #[test]
    fn propagation_on_zero_system() {
        let s = numeric(&[&[0, 0]], &[0]);
        let p = propagate(&s);
        assert!(p.chain.steps.is_empty());
        assert!(matches!(p.outcome, Outcome::Residual { .. }));
    }

    #[test]
    fn propagation_pairs_opposite_rows() {
        // x1 + x2 = k2 - k3, x3 = k3 - k2, x4 = k3
        let a = RatMatrix::from_i64(&[&[1, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        let k = |p: &str| RatForm::param(p);
        let rhs = vec![k("k2") - k("k3"), k("k3") - k("k2"), k("k3")];
        let vars = (1..=4).map(|i| format!("x{i}")).collect();
        let s = ParamSystem::new(vars, vec!["k2".into(), "k3".into()], a, rhs).unwrap();
        let p = propagate(&s);
        let Outcome::Determined { values, relations } = &p.outcome else { panic!("{:?}", p.outcome) };
        assert_eq!(relations["k3"], k("k2"));
        assert_eq!(values["x4"], k("k2"));
        assert_eq!(values["x1"], RatForm::zero());
        assert!(propagate::check_determined(&s, values, relations));
        let r = replay(&p.chain).unwrap();
        assert_eq!(r.outcome, p.outcome);
    }
}
