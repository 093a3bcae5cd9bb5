//! Exact arithmetic in cyclotomic fields.
//!
//! A [`CycValue`] is stored over the basis of `Q(ζ_N)` obtained as the tensor
//! product of the prime-power bases
//!
//! * odd `p^ν`: `ζ^(k + j·p^(ν-1))` with `1 ≤ j < p`, `0 ≤ k < p^(ν-1)`,
//! * `2^ν` (`ν ≥ 2`): `ζ^k` with `0 ≤ k < 2^(ν-1)`,
//!
//! glued through the Chinese remainder decomposition of exponents. For a
//! prime conductor this is `{ζ, …, ζ^(p-1)}`. Values are always kept at their
//! minimal conductor (never `≡ 2 mod 4`), so the representation is unique and
//! structural equality is field equality.

use crate::rat::{fmt_rat, parse_rat, rat, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CycError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("value of conductor {conductor} does not lie in Q(zeta_{n})")]
    ConductorMismatch { conductor: u64, n: u64 },
    #[error("invalid quadratic irrationality: {0}")]
    InvalidQuad(String),
    #[error("invalid cyclotomic encoding: {0}")]
    Encoding(String),
    #[error("{0} cannot be used as a cyclotomic conductor")]
    InvalidConductor(u64),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycValue {
    conductor: u64,
    coeffs: BTreeMap<u64, Rat>,
}

/// `a + b·√D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadSpec {
    pub a: Rat,
    pub b: Rat,
    pub d: i64,
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut nu = 0;
            while n.is_multiple_of(p) {
                n /= p;
                nu += 1;
            }
            out.push((p, nu));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == vec![(n, 1)]
}

fn mod_inv(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let e = (a as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

fn shift(e: u64, delta: i128, n: u64) -> u64 {
    (e as i128 + delta).rem_euclid(n as i128) as u64
}

fn accumulate(map: &mut BTreeMap<u64, Rat>, e: u64, c: Rat) {
    if c.is_zero() {
        return;
    }
    let entry = map.entry(e).or_insert_with(Rat::zero);
    *entry += c;
    if entry.is_zero() {
        map.remove(&e);
    }
}

/// Prime-power factor `q = p^ν` of `n` together with the multiplier mapping
/// the `q`-component of an exponent back into `Z/n`.
struct Part {
    p: u64,
    nu: u32,
    q: u64,
    cofactor: u64,
    inv: u64,
}

fn parts(n: u64) -> Vec<Part> {
    factorize(n)
        .into_iter()
        .map(|(p, nu)| {
            let q = p.pow(nu);
            let cofactor = n / q;
            Part { p, nu, q, cofactor, inv: mod_inv(cofactor % q, q) }
        })
        .collect()
}

impl Part {
    fn component(&self, e: u64) -> u64 {
        ((e % self.q) as u128 * self.inv as u128 % self.q as u128) as u64
    }
}

/// Rewrites every root of unity into basis elements of `Q(ζ_n)`.
fn to_basis(n: u64, terms: BTreeMap<u64, Rat>) -> BTreeMap<u64, Rat> {
    let mut cur = terms;
    for part in parts(n) {
        let mut next = BTreeMap::new();
        for (e, c) in cur {
            let f = part.component(e);
            if part.p == 2 {
                let half = part.q / 2;
                if f >= half {
                    accumulate(&mut next, shift(e, -((half * part.cofactor) as i128), n), -c);
                } else {
                    accumulate(&mut next, e, c);
                }
            } else {
                let top = part.q / part.p;
                if f / top == 0 {
                    for j in 1..part.p {
                        let delta = (j * top) as i128 * part.cofactor as i128;
                        accumulate(&mut next, shift(e, delta, n), -c.clone());
                    }
                } else {
                    accumulate(&mut next, e, c);
                }
            }
        }
        cur = next;
    }
    cur
}

/// Tries to find a proper divisor `m` of `n` with the value in `Q(ζ_m)`.
fn reduce_once(n: u64, terms: &BTreeMap<u64, Rat>) -> Option<(u64, BTreeMap<u64, Rat>)> {
    for part in parts(n) {
        let p = part.p;
        if (p == 2 && part.nu >= 3) || (p != 2 && part.nu >= 2) {
            if terms.keys().all(|&e| part.component(e) % p == 0) {
                let out = terms.iter().map(|(e, c)| (e / p, c.clone())).collect();
                return Some((n / p, out));
            }
        } else if p == 2 && part.nu == 2 {
            if terms.keys().all(|&e| part.component(e) == 0) {
                let out = terms.iter().map(|(e, c)| (e / 4, c.clone())).collect();
                return Some((n / 4, out));
            }
        } else {
            // p exactly divides n: membership in Q(ζ_{n/p}) means constant coefficients
            // along each fibre of the p-component.
            let mut fibres: BTreeMap<u64, Vec<&Rat>> = BTreeMap::new();
            for (&e, c) in terms {
                let f = part.component(e);
                let base = shift(e, -((f * part.cofactor) as i128), n);
                fibres.entry(base).or_default().push(c);
            }
            let ok = fibres
                .values()
                .all(|cs| cs.len() as u64 == p - 1 && cs.iter().all(|c| *c == cs[0]));
            if ok {
                let out = fibres
                    .into_iter()
                    .map(|(base, cs)| (base / p, -cs[0].clone()))
                    .collect();
                return Some((n / p, out));
            }
        }
    }
    None
}

impl CycValue {
    /// Builds `Σ c·ζ_n^e` from arbitrary (possibly redundant) terms.
    pub fn from_terms<I>(n: u64, terms: I) -> Result<Self, CycError>
    where
        I: IntoIterator<Item = (i64, Rat)>,
    {
        if n == 0 {
            return Err(CycError::InvalidConductor(0));
        }
        let mut raw = BTreeMap::new();
        if n % 4 == 2 {
            // ζ_{2m} = -ζ_m^((m+1)/2) for odd m.
            let m = n / 2;
            let half = m.div_ceil(2);
            for (e, c) in terms {
                let e = e.rem_euclid(n as i64) as u64;
                let c = if e % 2 == 1 { -c } else { c };
                accumulate(&mut raw, (e as u128 * half as u128 % m as u128) as u64, c);
            }
            return Ok(Self::normalised(m, raw));
        }
        for (e, c) in terms {
            accumulate(&mut raw, e.rem_euclid(n as i64) as u64, c);
        }
        Ok(Self::normalised(n, raw))
    }

    fn normalised(mut n: u64, raw: BTreeMap<u64, Rat>) -> Self {
        let mut terms = to_basis(n, raw);
        while let Some((m, t)) = reduce_once(n, &terms) {
            n = m;
            terms = to_basis(n, t);
        }
        if terms.is_empty() {
            n = 1;
        }
        CycValue { conductor: n, coeffs: terms }
    }

    pub fn zero() -> Self {
        CycValue { conductor: 1, coeffs: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::rational(Rat::one())
    }

    pub fn rational(r: Rat) -> Self {
        let mut coeffs = BTreeMap::new();
        accumulate(&mut coeffs, 0, r);
        CycValue { conductor: 1, coeffs }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(rat(n))
    }

    /// `ζ_n^e`.
    pub fn zeta_pow(n: u64, e: i64) -> Self {
        Self::from_terms(n, [(e, Rat::one())]).expect("positive conductor")
    }

    pub fn zeta(n: u64) -> Self {
        Self::zeta_pow(n, 1)
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// Canonical coefficient map `exponent → coefficient` (zero entries omitted).
    pub fn coeffs(&self) -> &BTreeMap<u64, Rat> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.conductor == 1
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if self.conductor == 1 {
            Some(self.coeffs.get(&0).cloned().unwrap_or_else(Rat::zero))
        } else {
            None
        }
    }

    fn lifted(&self, n: u64) -> BTreeMap<u64, Rat> {
        debug_assert_eq!(n % self.conductor, 0);
        let step = n / self.conductor;
        let raw = self.coeffs.iter().map(|(e, c)| (e * step, c.clone())).collect();
        to_basis(n, raw)
    }

    fn check_target(&self, n: u64) -> Result<(), CycError> {
        if n == 0 || n % 4 == 2 {
            return Err(CycError::InvalidConductor(n));
        }
        if !n.is_multiple_of(self.conductor) {
            return Err(CycError::ConductorMismatch { conductor: self.conductor, n });
        }
        Ok(())
    }

    /// Coefficients over the canonical basis of `Q(ζ_n)` ordered as [`basis_exponents`].
    pub fn basis_coefficients(&self, n: u64) -> Result<Vec<Rat>, CycError> {
        self.check_target(n)?;
        let lifted = self.lifted(n);
        Ok(basis_exponents(n)
            .into_iter()
            .map(|e| lifted.get(&e).cloned().unwrap_or_else(Rat::zero))
            .collect())
    }

    /// Image under `ζ ↦ ζ^u`; `u` must be coprime to the conductor.
    pub fn galois(&self, u: i64) -> Self {
        let n = self.conductor;
        if n == 1 {
            return self.clone();
        }
        debug_assert_eq!((u.rem_euclid(n as i64) as u64).gcd(&n), 1);
        let terms = self
            .coeffs
            .iter()
            .map(|(&e, c)| ((e as i128 * u as i128).rem_euclid(n as i128) as i64, c.clone()));
        Self::from_terms(n, terms).expect("nonzero conductor")
    }

    pub fn scale(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CycValue {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * r)).collect(),
        }
    }

    /// Trace from `Q(ζ_conductor)` down to `Q`.
    pub fn trace(&self) -> Rat {
        let n = self.conductor as i64;
        let mut acc = Self::zero();
        for u in 1..=n.max(1) {
            if (u as u64).gcd(&(n as u64)) == 1 {
                acc = acc + self.galois(u);
            }
        }
        acc.as_rational().expect("traces are rational")
    }

    /// Approximate complex value, for diagnostics only.
    pub fn to_complex(&self) -> (f64, f64) {
        let n = self.conductor as f64;
        self.coeffs.iter().fold((0.0, 0.0), |(re, im), (e, c)| {
            let c = c.numer().to_string().parse::<f64>().unwrap_or(f64::NAN)
                / c.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
            let th = 2.0 * std::f64::consts::PI * (*e as f64) / n;
            (re + c * th.cos(), im + c * th.sin())
        })
    }

    /// Parses one of the fixture encodings `{"rat": …}`, `{"quad": …}`,
    /// `{"zeta": n, "coeffs": [[e, c], …]}`, or a bare rational string/integer.
    pub fn from_json(v: &Value) -> Result<Self, CycError> {
        let enc = |m: &str| CycError::Encoding(format!("{m}: {v}"));
        match v {
            Value::String(s) => parse_rat(s).map(Self::rational).map_err(|_| enc("bad rational")),
            Value::Number(n) => n.as_i64().map(Self::int).ok_or_else(|| enc("non-integer number")),
            Value::Object(obj) => {
                if let Some(r) = obj.get("rat") {
                    let r = crate::rat::serde_rat::from_json(r).map_err(|_| enc("bad rational"))?;
                    Ok(Self::rational(r))
                } else if let Some(q) = obj.get("quad") {
                    let get = |k: &str| {
                        q.get(k)
                            .ok_or_else(|| enc("quad needs a, b, D"))
                            .and_then(|x| crate::rat::serde_rat::from_json(x).map_err(|_| enc("bad rational")))
                    };
                    let d = q.get("D").and_then(Value::as_i64).ok_or_else(|| enc("quad needs integer D"))?;
                    quad_to_cyc(&QuadSpec { a: get("a")?, b: get("b")?, d })
                } else if let Some(n) = obj.get("zeta") {
                    let n = n.as_u64().filter(|&n| n > 0).ok_or_else(|| enc("zeta must be positive"))?;
                    let coeffs = obj.get("coeffs").and_then(Value::as_array).ok_or_else(|| enc("missing coeffs"))?;
                    let mut terms = Vec::with_capacity(coeffs.len());
                    for t in coeffs {
                        let pair = t.as_array().filter(|p| p.len() == 2).ok_or_else(|| enc("coeff entry"))?;
                        let e = pair[0].as_i64().ok_or_else(|| enc("exponent"))?;
                        let c = crate::rat::serde_rat::from_json(&pair[1]).map_err(|_| enc("coefficient"))?;
                        terms.push((e, c));
                    }
                    Self::from_terms(n, terms)
                } else {
                    Err(enc("unknown encoding"))
                }
            }
            _ => Err(enc("unsupported JSON type")),
        }
    }

    pub fn to_json(&self) -> Value {
        match self.as_rational() {
            Some(r) => json!({ "rat": fmt_rat(&r) }),
            None => {
                let coeffs: Vec<Value> =
                    self.coeffs.iter().map(|(e, c)| json!([e, fmt_rat(c)])).collect();
                json!({ "zeta": self.conductor, "coeffs": coeffs })
            }
        }
    }
}

/// Basis exponents of `Q(ζ_n)` in increasing order.
pub fn basis_exponents(n: u64) -> Vec<u64> {
    if n == 1 {
        return vec![0];
    }
    let ps = parts(n);
    (0..n)
        .filter(|&e| {
            ps.iter().all(|part| {
                let f = part.component(e);
                if part.p == 2 {
                    f < part.q / 2
                } else {
                    f / (part.q / part.p) != 0
                }
            })
        })
        .collect()
}

/// Coefficients of `x` over `ζ_n, …, ζ_n^(n-1)` for prime `n`.
pub fn expand_primitive_basis(x: &CycValue, n: u64) -> Result<Vec<Rat>, CycError> {
    if !is_prime(n) {
        return Err(CycError::NotPrime(n));
    }
    x.basis_coefficients(n)
}

fn legendre(r: u64, p: u64) -> i64 {
    let mut acc: u128 = 1;
    let mut base = (r % p) as u128;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else if acc == 0 {
        0
    } else {
        -1
    }
}

/// Quadratic Gauss sum `Σ (r|p) ζ_p^r`; equals `√p` for `p ≡ 1 (4)` and `i√p` for `p ≡ 3 (4)`.
pub fn gauss_sum(p: u64) -> CycValue {
    let terms = (1..p).map(|r| (r as i64, rat(legendre(r, p))));
    CycValue::from_terms(p, terms).expect("prime conductor")
}

/// Principal square root of a square-free integer (positive real or positive imaginary part).
pub fn principal_sqrt(d: i64) -> Result<CycValue, CycError> {
    if d == 0 || d == 1 {
        return Err(CycError::InvalidQuad(format!("D = {d}")));
    }
    let m = d.unsigned_abs();
    let fac = factorize(m);
    if fac.iter().any(|&(_, nu)| nu > 1) {
        return Err(CycError::InvalidQuad(format!("D = {d} is not square-free")));
    }
    let mut root = CycValue::one();
    let mut quarter_turns: i64 = 0;
    for &(p, _) in &fac {
        if p == 2 {
            root = root * (CycValue::zeta_pow(8, 1) + CycValue::zeta_pow(8, 7));
        } else {
            root = root * gauss_sum(p);
            if p % 4 == 3 {
                quarter_turns += 1;
            }
        }
    }
    let wanted = if d < 0 { 1 } else { 0 };
    let fix = (wanted - quarter_turns).rem_euclid(4);
    if fix != 0 {
        root = root * CycValue::zeta_pow(4, fix);
    }
    let check = &root * &root;
    if check != CycValue::int(d) {
        return Err(CycError::InvalidQuad(format!("square-root construction failed for D = {d}")));
    }
    Ok(root)
}

pub fn quad_to_cyc(q: &QuadSpec) -> Result<CycValue, CycError> {
    let root = principal_sqrt(q.d)?;
    if q.b.is_zero() {
        return Ok(CycValue::rational(q.a.clone()));
    }
    Ok(CycValue::rational(q.a.clone()) + root.scale(&q.b))
}

pub fn conj(x: &CycValue) -> CycValue {
    x.galois(-1)
}

fn combine(x: &CycValue, y: &CycValue, mul: bool) -> CycValue {
    let n = x.conductor.lcm(&y.conductor);
    let a = x.lifted(n);
    let b = y.lifted(n);
    let mut raw = BTreeMap::new();
    if mul {
        for (e1, c1) in &a {
            for (e2, c2) in &b {
                accumulate(&mut raw, (e1 + e2) % n, c1 * c2);
            }
        }
    } else {
        raw = a;
        for (e, c) in b {
            accumulate(&mut raw, e, c);
        }
    }
    CycValue::normalised(n, raw)
}

impl<'a> Add<&'a CycValue> for &'a CycValue {
    type Output = CycValue;
    fn add(self, rhs: &CycValue) -> CycValue {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        combine(self, rhs, false)
    }
}

impl<'a> Mul<&'a CycValue> for &'a CycValue {
    type Output = CycValue;
    fn mul(self, rhs: &CycValue) -> CycValue {
        if self.is_zero() || rhs.is_zero() {
            return CycValue::zero();
        }
        if let Some(r) = rhs.as_rational() {
            return self.scale(&r);
        }
        if let Some(r) = self.as_rational() {
            return rhs.scale(&r);
        }
        combine(self, rhs, true)
    }
}

impl Neg for &CycValue {
    type Output = CycValue;
    fn neg(self) -> CycValue {
        self.scale(&-Rat::one())
    }
}

impl<'a> Sub<&'a CycValue> for &'a CycValue {
    type Output = CycValue;
    fn sub(self, rhs: &CycValue) -> CycValue {
        self + &(-rhs)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<CycValue> for CycValue {
            type Output = CycValue;
            fn $m(self, rhs: CycValue) -> CycValue { (&self).$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Mul mul, Sub sub);

impl Neg for CycValue {
    type Output = CycValue;
    fn neg(self) -> CycValue {
        -&self
    }
}

impl Zero for CycValue {
    fn zero() -> Self {
        CycValue::zero()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl One for CycValue {
    fn one() -> Self {
        CycValue::one()
    }
}

impl From<Rat> for CycValue {
    fn from(r: Rat) -> Self {
        CycValue::rational(r)
    }
}

impl fmt::Display for CycValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{}", fmt_rat(&r));
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            if !a.is_one() {
                write!(f, "{}*", fmt_rat(&a))?;
            }
            write!(f, "z{}^{}", self.conductor, e)?;
        }
        Ok(())
    }
}

impl fmt::Debug for CycValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycValue({self})")
    }
}
