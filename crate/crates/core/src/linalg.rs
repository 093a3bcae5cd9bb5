//! Dense exact rational linear algebra.

use crate::rat::{serde_rat, Rat};
use num_traits::{One, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("ragged matrix: row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<Rat>>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![vec![Rat::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = Rat::one();
        }
        m
    }

    /// Builds a matrix from rows; `cols` is needed to give empty matrices a width.
    pub fn from_rows(rows: Vec<Vec<Rat>>, cols: usize) -> Result<Self, LinalgError> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::Ragged { row: i, got: r.len(), expected: cols });
            }
        }
        Ok(RatMatrix { rows: rows.len(), cols, data: rows })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows.iter().map(|r| r.iter().map(|&x| crate::rat::rat(x)).collect()).collect();
        Self::from_rows(data, cols).expect("rectangular literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i]
    }

    pub fn row_vecs(&self) -> &[Vec<Rat>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Rat> {
        self.data.iter().map(|r| r[j].clone()).collect()
    }

    pub fn push_row(&mut self, row: Vec<Rat>) -> Result<(), LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::Ragged { row: self.rows, got: row.len(), expected: self.cols });
        }
        self.data.push(row);
        self.rows += 1;
        Ok(())
    }

    /// `[self | col]`.
    pub fn augment(&self, col: &[Rat]) -> Result<Self, LinalgError> {
        if col.len() != self.rows {
            return Err(LinalgError::Dimension(format!("column of length {} for {} rows", col.len(), self.rows)));
        }
        let data = self
            .data
            .iter()
            .zip(col)
            .map(|(r, c)| {
                let mut r = r.clone();
                r.push(c.clone());
                r
            })
            .collect();
        Ok(RatMatrix { rows: self.rows, cols: self.cols + 1, data })
    }

    pub fn mul_vec(&self, x: &[Rat]) -> Result<Vec<Rat>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::Dimension(format!("vector of length {} for {} columns", x.len(), self.cols)));
        }
        Ok(self.data.iter().map(|r| dot(r, x)).collect())
    }

    /// `yᵀ·self`.
    pub fn left_mul_vec(&self, y: &[Rat]) -> Result<Vec<Rat>, LinalgError> {
        if y.len() != self.rows {
            return Err(LinalgError::Dimension(format!("vector of length {} for {} rows", y.len(), self.rows)));
        }
        let mut out = vec![Rat::zero(); self.cols];
        for (r, yi) in self.data.iter().zip(y) {
            if yi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(r) {
                *o += yi * a;
            }
        }
        Ok(out)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let data = self.data.iter().map(|r| cols.iter().map(|&j| r[j].clone()).collect()).collect();
        RatMatrix { rows: self.rows, cols: cols.len(), data }
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.data[i].iter().all(Zero::is_zero)
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| if x.is_zero() { acc } else { acc + x * y })
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatMatrix {}x{}", self.rows, self.cols)?;
        for r in &self.data {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl Serialize for RatMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = self.data.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
        let cols = raw.first().map_or(0, Vec::len);
        let rows = raw
            .iter()
            .map(|r| r.iter().map(|x| serde_rat::from_json(x).map_err(de::Error::custom)).collect())
            .collect::<Result<Vec<Vec<Rat>>, D::Error>>()?;
        RatMatrix::from_rows(rows, cols).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrefResult {
    pub rref: RatMatrix,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// Gauss–Jordan elimination restricted to columns `< limit`, applying the same
/// row operations to the transform matrix returned alongside.
fn eliminate(m: &RatMatrix, limit: usize) -> (RatMatrix, Vec<usize>, RatMatrix) {
    let mut a = m.clone();
    let mut t = RatMatrix::identity(m.rows);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..limit {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a.data[i][c].is_zero()) else {
            continue;
        };
        a.data.swap(r, p);
        t.data.swap(r, p);
        let inv = a.data[r][c].recip();
        if !inv.is_one() {
            for x in a.data[r].iter_mut().chain(t.data[r].iter_mut()) {
                *x *= &inv;
            }
        }
        let (prow, trow) = (a.data[r].clone(), t.data[r].clone());
        for i in 0..a.rows {
            if i == r || a.data[i][c].is_zero() {
                continue;
            }
            let f = a.data[i][c].clone();
            for (x, y) in a.data[i].iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
            for (x, y) in t.data[i].iter_mut().zip(&trow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots, t)
}

/// Canonical reduced row echelon form, pivoting on the first nonzero entry.
pub fn rref(m: &RatMatrix) -> RrefResult {
    let (rref, pivots, _) = eliminate(m, m.cols);
    let rank = pivots.len();
    RrefResult { rref, pivots, rank }
}

/// Reduces only on the first `limit` columns and returns the transform `T`
/// with `T·m = result`; used for augmented systems with symbolic right-hand sides.
pub fn rref_with_transform(m: &RatMatrix, limit: usize) -> (RrefResult, RatMatrix) {
    let (rref, pivots, t) = eliminate(m, limit.min(m.cols));
    let rank = pivots.len();
    (RrefResult { rref, pivots, rank }, t)
}

pub fn row_space_equal(x: &RatMatrix, y: &RatMatrix) -> Result<bool, LinalgError> {
    if x.cols != y.cols {
        return Err(LinalgError::Dimension(format!("{} vs {} columns", x.cols, y.cols)));
    }
    let (rx, ry) = (rref(x), rref(y));
    Ok(rx.rank == ry.rank && rx.rref.data[..rx.rank] == ry.rref.data[..ry.rank])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AffineSolution {
    Consistent { particular: Vec<Rat>, nullspace: Vec<Vec<Rat>> },
    /// Row of `rref([a|b])` reading `0 = nonzero`.
    Inconsistent { row: Vec<Rat> },
}

pub fn solve_affine(a: &RatMatrix, b: &[Rat]) -> Result<AffineSolution, LinalgError> {
    let aug = a.augment(b)?;
    let n = a.cols;
    let res = rref(&aug);
    if res.pivots.last() == Some(&n) {
        return Ok(AffineSolution::Inconsistent { row: res.rref.data[res.rank - 1].clone() });
    }
    let mut particular = vec![Rat::zero(); n];
    for (i, &p) in res.pivots.iter().enumerate() {
        particular[p] = res.rref.data[i][n].clone();
    }
    let free: Vec<usize> = (0..n).filter(|j| !res.pivots.contains(j)).collect();
    let nullspace = free
        .iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); n];
            v[f] = Rat::one();
            for (i, &p) in res.pivots.iter().enumerate() {
                v[p] = -res.rref.data[i][f].clone();
            }
            v
        })
        .collect();
    Ok(AffineSolution::Consistent { particular, nullspace })
}

/// Serde adapter for `Vec<Vec<Rat>>` as nested string arrays.
pub mod serde_rat_rows {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<Rat>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = v.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rat>>, D::Error> {
        let raw = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
        raw.iter()
            .map(|r| r.iter().map(|x| serde_rat::from_json(x).map_err(de::Error::custom)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn identity_is_reduced() {
        let r = rref(&RatMatrix::identity(3));
        assert_eq!(r.rref, RatMatrix::identity(3));
        assert_eq!(r.pivots, vec![0, 1, 2]);
        assert_eq!(r.rank, 3);
    }

    #[test]
    fn row_space_under_row_ops() {
        let m = RatMatrix::from_i64(&[&[1, 2, 3], &[0, 1, 4], &[1, 3, 7]]);
        let swapped = RatMatrix::from_i64(&[&[0, 1, 4], &[1, 2, 3], &[1, 3, 7]]);
        let scaled = RatMatrix::from_i64(&[&[3, 6, 9], &[0, 1, 4], &[1, 3, 7]]);
        assert!(row_space_equal(&m, &swapped).unwrap());
        assert!(row_space_equal(&m, &scaled).unwrap());
        assert!(!row_space_equal(&m, &RatMatrix::identity(3)).unwrap());
        assert!(row_space_equal(&m, &RatMatrix::identity(2)).is_err());
    }

    #[test]
    fn affine_examples() {
        let b = vec![rat(4), rat(-1), rat(7)];
        assert_eq!(
            solve_affine(&RatMatrix::identity(3), &b).unwrap(),
            AffineSolution::Consistent { particular: b.clone(), nullspace: vec![] }
        );
        let a = RatMatrix::from_i64(&[&[1, 1]]);
        assert_eq!(
            solve_affine(&a, &[rat(2)]).unwrap(),
            AffineSolution::Consistent { particular: vec![rat(2), rat(0)], nullspace: vec![vec![rat(-1), rat(1)]] }
        );
        let a = RatMatrix::from_i64(&[&[1, 1], &[2, 2]]);
        assert!(matches!(solve_affine(&a, &[rat(1), rat(3)]).unwrap(), AffineSolution::Inconsistent { .. }));
    }

    #[test]
    fn transform_reproduces_rref() {
        let m = RatMatrix::from_i64(&[&[0, 2, 4, 1], &[1, 1, 1, 0], &[1, 3, 5, 1]]);
        let (res, t) = rref_with_transform(&m, 3);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                assert_eq!(&dot(t.row(i), &m.column(j)), res.rref.get(i, j));
            }
        }
        assert_eq!(res.pivots, vec![0, 1]);
    }

    #[test]
    fn json_round_trip() {
        let m = RatMatrix::from_i64(&[&[1, -2], &[3, 4]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"[["1","-2"],["3","4"]]"#);
        assert_eq!(serde_json::from_str::<RatMatrix>(&s).unwrap(), m);
    }
}
