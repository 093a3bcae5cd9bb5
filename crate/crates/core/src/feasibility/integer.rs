//! Exhaustive non-negative integer search inside the box cut out by a row with
//! positive coefficients.

use crate::linalg::RatMatrix;
use crate::rat::{floor_rat, Rat};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::FeasError;

pub struct SearchResult {
    pub witness: Option<Vec<Rat>>,
    pub upper: Vec<BigInt>,
    pub nodes: u64,
}

/// Per-variable upper bounds from the bound row, or an error if that row has a
/// non-positive coefficient.
pub fn box_bounds(a: &RatMatrix, b: &[Rat], bound_row: usize) -> Result<Vec<BigInt>, FeasError> {
    if bound_row >= a.rows() {
        return Err(FeasError::BoundRow(format!("row {bound_row} does not exist")));
    }
    let row = a.row(bound_row);
    if let Some(j) = row.iter().position(|c| !c.is_positive()) {
        return Err(FeasError::BoundRow(format!(
            "row {bound_row} has non-positive coefficient {} in column {j}",
            row[j]
        )));
    }
    Ok(row
        .iter()
        .map(|c| {
            let u = floor_rat(&(&b[bound_row] / c));
            if u.is_negative() {
                BigInt::from(-1)
            } else {
                u
            }
        })
        .collect())
}

struct Search<'a> {
    a: &'a RatMatrix,
    upper: Vec<Rat>,
    /// For each row and depth, min/max of the row's contribution from variables `depth..n`.
    tail_min: Vec<Vec<Rat>>,
    tail_max: Vec<Vec<Rat>>,
    nontrivial: bool,
    nodes: u64,
    current: Vec<Rat>,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, residual: &mut [Rat]) -> bool {
        self.nodes += 1;
        let n = self.a.cols();
        for i in 0..self.a.rows() {
            let r = &residual[i];
            if *r < self.tail_min[i][depth] || *r > self.tail_max[i][depth] {
                return false;
            }
        }
        if depth == n {
            return !(self.nontrivial && self.current.iter().all(Zero::is_zero));
        }
        let hi = self.upper[depth].to_integer().to_u64().unwrap_or(u64::MAX);
        for v in 0..=hi {
            let val = Rat::from_integer(BigInt::from(v));
            for i in 0..self.a.rows() {
                residual[i] -= self.a.get(i, depth) * &val;
            }
            self.current[depth] = val.clone();
            let found = self.dfs(depth + 1, residual);
            for i in 0..self.a.rows() {
                residual[i] += self.a.get(i, depth) * &val;
            }
            if found {
                return true;
            }
        }
        self.current[depth] = Rat::zero();
        false
    }
}

pub fn search(a: &RatMatrix, b: &[Rat], bound_row: usize, nontrivial: bool) -> Result<SearchResult, FeasError> {
    let upper = box_bounds(a, b, bound_row)?;
    let n = a.cols();
    if upper.iter().any(|u| u.is_negative()) {
        return Ok(SearchResult { witness: None, upper, nodes: 0 });
    }
    let upper_rat: Vec<Rat> = upper.iter().cloned().map(Rat::from_integer).collect();
    let mut tail_min = vec![vec![Rat::zero(); n + 1]; a.rows()];
    let mut tail_max = tail_min.clone();
    for i in 0..a.rows() {
        for j in (0..n).rev() {
            let span = a.get(i, j) * &upper_rat[j];
            let (lo, hi) = if span.is_negative() { (span, Rat::zero()) } else { (Rat::zero(), span) };
            tail_min[i][j] = &tail_min[i][j + 1] + lo;
            tail_max[i][j] = &tail_max[i][j + 1] + hi;
        }
    }
    let mut s = Search { a, upper: upper_rat, tail_min, tail_max, nontrivial, nodes: 0, current: vec![Rat::zero(); n] };
    let mut residual = b.to_vec();
    let found = s.dfs(0, &mut residual);
    Ok(SearchResult { witness: found.then(|| s.current.clone()), upper, nodes: s.nodes })
}
