//! Phase-one simplex over exact rationals with Bland's rule.

use crate::linalg::RatMatrix;
use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

pub enum LpOutcome {
    Feasible(Vec<Rat>),
    /// `y` with `yᵀA ≥ 0` and `yᵀb < 0`.
    Infeasible(Vec<Rat>),
}

/// Decides `A·x = b, x ≥ 0`.
pub fn phase_one(a: &RatMatrix, b: &[Rat]) -> LpOutcome {
    let (m, n) = (a.rows(), a.cols());
    let width = n + m + 1;
    let rhs = width - 1;
    let sign: Vec<Rat> = b.iter().map(|x| if x.is_negative() { -Rat::one() } else { Rat::one() }).collect();
    let mut t: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(width);
            row.extend(a.row(i).iter().map(|x| x * &sign[i]));
            row.extend((0..m).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            row.push(&b[i] * &sign[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let cost = |j: usize| if j >= n && j < n + m { Rat::one() } else { Rat::zero() };

    let reduced = |t: &Vec<Vec<Rat>>, basis: &[usize], j: usize| {
        let mut r = cost(j);
        for (i, &bi) in basis.iter().enumerate() {
            if bi >= n && !t[i][j].is_zero() {
                r -= &t[i][j];
            }
        }
        r
    };

    while let Some(enter) = (0..n + m).find(|&j| reduced(&t, &basis, j).is_negative()) {
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][rhs] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // A phase-one objective is bounded below by zero, so some row always qualifies.
        let (r, _) = leave.expect("bounded phase-one objective");
        let inv = t[r][enter].recip();
        for x in t[r].iter_mut() {
            *x *= &inv;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == r || row[enter].is_zero() {
                continue;
            }
            let f = row[enter].clone();
            for (x, y) in row.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        basis[r] = enter;
    }

    let objective: Rat = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][rhs].clone()).sum();
    if objective.is_zero() {
        let mut x = vec![Rat::zero(); n];
        for (i, &bi) in basis.iter().enumerate() {
            if bi < n {
                x[bi] = t[i][rhs].clone();
            }
        }
        LpOutcome::Feasible(x)
    } else {
        // Simplex multipliers π = 1 − (reduced cost of each artificial); y = −D·π.
        let y = (0..m).map(|i| -(Rat::one() - reduced(&t, &basis, n + i)) * &sign[i]).collect();
        LpOutcome::Infeasible(y)
    }
}
