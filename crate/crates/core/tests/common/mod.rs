//! Test-side oracles shared by the property suite and the acceptance run.
#![allow(dead_code)]

use gkcert_core::chartab::{fixed_point_count, fpf_filter, load_slice_file};
use gkcert_core::cyclotomic::CycValue;
use gkcert_core::linalg::RatMatrix;
use gkcert_core::rat::{rat, Rat};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

const CONDUCTORS: [u64; 10] = [1, 3, 4, 5, 7, 8, 9, 12, 15, 21];

pub fn cyc() -> impl Strategy<Value = CycValue> {
    (prop::sample::select(&CONDUCTORS[..]), prop::collection::vec((0i64..21, -4i64..=4), 0..5)).prop_map(|(n, terms)| {
        CycValue::from_terms(n, terms.into_iter().map(|(e, c)| (e, rat(c)))).unwrap()
    })
}

/// `c·x ≤ d` (or `= d`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    c: Vec<Rat>,
    d: Rat,
}

fn normalise(mut l: Lin) -> Lin {
    if let Some(s) = l.c.iter().find(|x| !x.is_zero()).map(|x| x.abs()) {
        l.c.iter_mut().for_each(|x| *x /= &s);
        l.d /= &s;
    }
    l
}

/// Fourier–Motzkin elimination on `A x = b, x ≥ 0`; equalities are substituted first.
pub fn fm_feasible(a: &[Vec<i64>], b: &[i64], n: usize) -> bool {
    let mut eqs: Vec<Lin> = a.iter().zip(b).map(|(r, &d)| Lin { c: r.iter().map(|&v| rat(v)).collect(), d: rat(d) }).collect();
    let mut ineq: Vec<Lin> = (0..n)
        .map(|j| Lin { c: (0..n).map(|i| if i == j { -Rat::one() } else { Rat::zero() }).collect(), d: Rat::zero() })
        .collect();
    for j in 0..n {
        if let Some(k) = eqs.iter().position(|e| !e.c[j].is_zero()) {
            let e = eqs.remove(k);
            let sub = |l: &mut Lin| {
                let f = &l.c[j] / &e.c[j];
                for (x, y) in l.c.iter_mut().zip(&e.c) {
                    *x -= &f * y;
                }
                l.d -= &f * &e.d;
            };
            eqs.iter_mut().for_each(sub);
            ineq.iter_mut().for_each(sub);
            continue;
        }
        let (mut pos, mut neg, mut rest) = (vec![], vec![], vec![]);
        for l in ineq {
            match l.c[j].cmp(&Rat::zero()) {
                std::cmp::Ordering::Greater => pos.push(l),
                std::cmp::Ordering::Less => neg.push(l),
                std::cmp::Ordering::Equal => rest.push(l),
            }
        }
        for p in &pos {
            for q in &neg {
                let (fp, fq) = (-q.c[j].clone(), p.c[j].clone());
                let c = p.c.iter().zip(&q.c).map(|(x, y)| &fp * x + &fq * y).collect();
                rest.push(normalise(Lin { c, d: &fp * &p.d + &fq * &q.d }));
            }
        }
        rest.sort();
        rest.dedup();
        ineq = rest;
    }
    eqs.iter().all(|e| e.d.is_zero()) && ineq.iter().all(|l| !l.d.is_negative())
}

pub fn numeric(a: &[Vec<i64>], b: &[i64]) -> (RatMatrix, Vec<Rat>) {
    let rows: Vec<&[i64]> = a.iter().map(Vec::as_slice).collect();
    (RatMatrix::from_i64(&rows), b.iter().map(|&v| rat(v)).collect())
}

pub fn system() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>, usize)> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
        (prop::collection::vec(prop::collection::vec(-5i64..=5, n), m), prop::collection::vec(-5i64..=5, m), Just(n))
    })
}

/// Systems whose first row is strictly positive, so the non-negative solutions form a box.
pub fn bounded_system() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(1i64..=5, n),
            prop::collection::vec(prop::collection::vec(-5i64..=5, n), m),
            0i64..=12,
            prop::collection::vec(-5i64..=5, m),
        )
            .prop_map(|(top, rest, b0, brest)| {
                let mut a = vec![top];
                a.extend(rest);
                let mut b = vec![b0];
                b.extend(brest);
                (a, b)
            })
    })
}

pub fn brute_force(a: &[Vec<i64>], b: &[i64], nontrivial: bool) -> bool {
    let n = a[0].len();
    let ub: Vec<i64> = a[0].iter().map(|&c| b[0] / c).collect();
    let mut x = vec![0i64; n];
    loop {
        let ok = a.iter().zip(b).all(|(r, &d)| r.iter().zip(&x).map(|(c, v)| c * v).sum::<i64>() == d);
        if ok && (!nontrivial || x.iter().any(|&v| v != 0)) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            if x[i] < ub[i] {
                x[i] += 1;
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

/// Checks every bundled table: survivors of the fixed-point filter are exactly
/// the characters whose fixed-space dimension is zero on every class of the order.
pub fn check_fpf_survivors() -> Result<usize, String> {
    let dir = gkcert_core::cases::default_fixture_dir().join("tables");
    let mut tables = 0;
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let slice = load_slice_file(&entry.map_err(|e| e.to_string())?.path()).map_err(|e| e.to_string())?;
        tables += 1;
        let orders: std::collections::BTreeSet<u64> = slice.classes.iter().map(|c| c.order).filter(|&o| o > 1).collect();
        for o in orders {
            let survivors = fpf_filter(&slice, o).map_err(|e| e.to_string())?;
            let classes: Vec<&str> = slice.classes.iter().filter(|c| c.order == o).map(|c| c.name.as_str()).collect();
            for id in slice.character_ids() {
                let mut free = true;
                for c in &classes {
                    free &= fixed_point_count(&slice, id, c).map_err(|e| e.to_string())?.is_zero();
                }
                if survivors.contains(&id) != free {
                    return Err(format!("{} character {id} order {o}", slice.group));
                }
            }
        }
    }
    Ok(tables)
}
