//! Exact arithmetic in Q, quadratic fields Q(√d) and cyclotomic rings
//! Z[ζ_n], together with the facts about units and primes among cyclotomic
//! integers that drive the dihedral and decomposable computations.
//!
//! Elements are generic over the integer type used for their rational
//! coordinates; the crate root fixes the concrete big-integer instance.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith;

/// Integer types usable as coordinates of field elements.
pub trait Scalar:
    Integer + Signed + Clone + FromPrimitive + ToPrimitive + Hash + fmt::Debug + fmt::Display
{
}

impl<T> Scalar for T where
    T: Integer + Signed + Clone + FromPrimitive + ToPrimitive + Hash + fmt::Debug + fmt::Display
{
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumfieldError {
    #[error("operands live in different fields: {0} and {1}")]
    FieldMismatch(FieldTag, FieldTag),
    #[error("division by zero")]
    DivisionByZero,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("{0} and {1} are not coprime")]
    NotCoprime(i64, i64),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Which field an element belongs to.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub enum FieldTag {
    Rational,
    /// Q(√d) for a square-free d ≠ 0, 1.
    Quadratic(i64),
    /// Q(ζ_n), elements stored modulo the cyclotomic polynomial Φ_n.
    Cyclotomic(u32),
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Rational => write!(f, "Q"),
            FieldTag::Quadratic(d) => write!(f, "Q(sqrt({d}))"),
            FieldTag::Cyclotomic(n) => write!(f, "Q(zeta_{n})"),
        }
    }
}

/// Coefficients of the cyclotomic polynomial Φ_n, lowest degree first.
pub fn cyclotomic_poly(n: u32) -> Vec<i64> {
    assert!(n >= 1);
    // x^n - 1 divided by Φ_d for every proper divisor d of n.
    let mut num: Vec<i64> = vec![0; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    num
}

fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = *b.last().unwrap();
    let mut q = vec![0i64; a.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db] / lead;
        q[i] = c;
        for j in 0..=db {
            r[i + j] -= c * b[j];
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// Euler's totient.
pub fn totient(n: u32) -> u32 {
    arith::factorize(n as u64)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p as u32 * (p as u32 - 1))
}

/// An exact element of Q, a quadratic field, or a cyclotomic field.
///
/// Quadratic coordinates `[x, y]` mean `x + y√d`; cyclotomic coordinates are
/// the coefficients of a polynomial in ζ of degree below deg Φ_n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nf<T: Scalar> {
    field: FieldTag,
    coords: Vec<Ratio<T>>,
}

fn dim(tag: FieldTag) -> usize {
    match tag {
        FieldTag::Rational => 1,
        FieldTag::Quadratic(_) => 2,
        FieldTag::Cyclotomic(n) => totient(n) as usize,
    }
}

fn rat<T: Scalar>(x: i64) -> Ratio<T> {
    Ratio::from_integer(T::from_i64(x).expect("integer conversion"))
}

impl<T: Scalar> Nf<T> {
    /// Builds an element from raw coordinates, reducing cyclotomic input
    /// modulo Φ_n and padding to the canonical length.
    pub fn from_coords(field: FieldTag, coords: Vec<Ratio<T>>) -> Self {
        let coords = match field {
            FieldTag::Cyclotomic(n) => reduce_cyclo(coords, n),
            _ => {
                let mut c = coords;
                let d = dim(field);
                assert!(c.len() <= d, "too many coordinates for {field}");
                c.resize(d, Ratio::zero());
                c
            }
        };
        Nf { field, coords }
    }

    pub fn zero(field: FieldTag) -> Self {
        Nf {
            field,
            coords: vec![Ratio::zero(); dim(field)],
        }
    }

    pub fn one(field: FieldTag) -> Self {
        Self::from_rational(field, Ratio::one())
    }

    pub fn from_int(field: FieldTag, x: i64) -> Self {
        Self::from_rational(field, rat(x))
    }

    pub fn from_rational(field: FieldTag, x: Ratio<T>) -> Self {
        let mut c = vec![Ratio::zero(); dim(field)];
        c[0] = x;
        Nf { field, coords: c }
    }

    /// `x + y√d` in Q(√d).
    pub fn quadratic(d: i64, x: Ratio<T>, y: Ratio<T>) -> Self {
        Nf {
            field: FieldTag::Quadratic(d),
            coords: vec![x, y],
        }
    }

    /// The square root √d as an element of Q(√d).
    pub fn sqrt_d(d: i64) -> Self {
        Self::quadratic(d, Ratio::zero(), Ratio::one())
    }

    /// The primitive root ζ_n = e^{2πi/n} as an element of Q(ζ_n).
    pub fn zeta(n: u32) -> Self {
        let mut c = vec![Ratio::zero(); 2];
        c[1] = Ratio::one();
        Self::from_coords(FieldTag::Cyclotomic(n), c)
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn coords(&self) -> &[Ratio<T>] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(|c| c.is_zero())
    }

    /// True when the element lies in Q.
    pub fn is_rational(&self) -> bool {
        self.coords[1..].iter().all(|c| c.is_zero())
    }

    /// The rational value, when the element lies in Q.
    pub fn as_rational(&self) -> Option<Ratio<T>> {
        self.is_rational().then(|| self.coords[0].clone())
    }

    /// Re-tags a rational element into another field.
    pub fn embed(&self, field: FieldTag) -> Result<Self, NumfieldError> {
        if self.field == field {
            return Ok(self.clone());
        }
        match self.as_rational() {
            Some(r) => Ok(Self::from_rational(field, r)),
            None => Err(NumfieldError::FieldMismatch(self.field, field)),
        }
    }

    fn common(&self, other: &Self) -> Result<(Self, Self), NumfieldError> {
        if self.field == other.field {
            return Ok((self.clone(), other.clone()));
        }
        if self.field == FieldTag::Rational {
            return Ok((self.embed(other.field)?, other.clone()));
        }
        if other.field == FieldTag::Rational {
            return Ok((self.clone(), other.embed(self.field)?));
        }
        Err(NumfieldError::FieldMismatch(self.field, other.field))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, NumfieldError> {
        let (a, b) = self.common(other)?;
        let coords = a.coords.iter().zip(&b.coords).map(|(x, y)| x + y).collect();
        Ok(Nf {
            field: a.field,
            coords,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, NumfieldError> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, NumfieldError> {
        let (a, b) = self.common(other)?;
        Ok(match a.field {
            FieldTag::Rational => Nf {
                field: a.field,
                coords: vec![&a.coords[0] * &b.coords[0]],
            },
            FieldTag::Quadratic(d) => {
                let dd: Ratio<T> = rat(d);
                let (x1, y1, x2, y2) = (&a.coords[0], &a.coords[1], &b.coords[0], &b.coords[1]);
                let x = x1 * x2 + &(y1 * y2) * &dd;
                let y = x1 * y2 + y1 * x2;
                Nf {
                    field: a.field,
                    coords: vec![x, y],
                }
            }
            FieldTag::Cyclotomic(n) => {
                let mut prod = vec![Ratio::zero(); a.coords.len() + b.coords.len()];
                for (i, x) in a.coords.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in b.coords.iter().enumerate() {
                        prod[i + j] = &prod[i + j] + &(x * y);
                    }
                }
                Self::from_coords(FieldTag::Cyclotomic(n), prod)
            }
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, NumfieldError> {
        self.checked_mul(&other.inv()?)
    }

    pub fn neg_ref(&self) -> Self {
        Nf {
            field: self.field,
            coords: self.coords.iter().map(|c| -c.clone()).collect(),
        }
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Self, NumfieldError> {
        if self.is_zero() {
            return Err(NumfieldError::DivisionByZero);
        }
        Ok(match self.field {
            FieldTag::Rational => Nf {
                field: self.field,
                coords: vec![self.coords[0].recip()],
            },
            FieldTag::Quadratic(_) => {
                let n = self.norm();
                let c = self.conj();
                Nf {
                    field: self.field,
                    coords: c.coords.iter().map(|x| x / &n).collect(),
                }
            }
            FieldTag::Cyclotomic(n) => {
                let phi: Vec<Ratio<T>> = cyclotomic_poly(n).into_iter().map(rat).collect();
                let inv = poly_inverse_mod(&self.coords, &phi);
                Self::from_coords(self.field, inv)
            }
        })
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, e: i64) -> Result<Self, NumfieldError> {
        let mut base = if e < 0 { self.inv()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Self::one(self.field);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            base = base.checked_mul(&base)?;
            k >>= 1;
        }
        Ok(acc)
    }

    /// The nontrivial automorphism: √d ↦ −√d, or ζ ↦ ζ^{−1}.
    pub fn conj(&self) -> Self {
        match self.field {
            FieldTag::Rational => self.clone(),
            FieldTag::Quadratic(_) => Nf {
                field: self.field,
                coords: vec![self.coords[0].clone(), -self.coords[1].clone()],
            },
            FieldTag::Cyclotomic(n) => {
                let mut c = vec![Ratio::zero(); n as usize];
                for (i, x) in self.coords.iter().enumerate() {
                    let j = (n as usize - i) % n as usize;
                    c[j] = &c[j] + x;
                }
                Self::from_coords(self.field, c)
            }
        }
    }

    /// Absolute norm to Q.
    pub fn norm(&self) -> Ratio<T> {
        match self.field {
            FieldTag::Rational => self.coords[0].clone(),
            FieldTag::Quadratic(d) => {
                let (x, y) = (&self.coords[0], &self.coords[1]);
                x * x - &(y * y) * &rat::<T>(d)
            }
            FieldTag::Cyclotomic(_) => self.mult_matrix_det(),
        }
    }

    /// Absolute trace to Q.
    pub fn trace(&self) -> Ratio<T> {
        match self.field {
            FieldTag::Rational => self.coords[0].clone(),
            FieldTag::Quadratic(_) => &self.coords[0] + &self.coords[0],
            FieldTag::Cyclotomic(_) => {
                let m = self.mult_matrix();
                (0..m.len()).fold(Ratio::zero(), |acc, i| acc + &m[i][i])
            }
        }
    }

    /// Matrix of multiplication by `self` on the power basis.
    fn mult_matrix(&self) -> Vec<Vec<Ratio<T>>> {
        let k = self.coords.len();
        let mut cols = Vec::with_capacity(k);
        let mut basis = Self::one(self.field);
        let z = match self.field {
            FieldTag::Cyclotomic(n) => Self::zeta(n),
            _ => unreachable!(),
        };
        for _ in 0..k {
            cols.push(self.checked_mul(&basis).unwrap().coords);
            basis = basis.checked_mul(&z).unwrap();
        }
        (0..k)
            .map(|i| (0..k).map(|j| cols[j][i].clone()).collect())
            .collect()
    }

    fn mult_matrix_det(&self) -> Ratio<T> {
        let mut m = self.mult_matrix();
        let n = m.len();
        let mut det = Ratio::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
                return Ratio::zero();
            };
            if p != c {
                m.swap(p, c);
                det = -det;
            }
            let piv = m[c][c].clone();
            det = det * &piv;
            for r in c + 1..n {
                if !m[r][c].is_zero() {
                    let f = &m[r][c] / &piv;
                    for k in c..n {
                        let t = &f * &m[c][k];
                        m[r][k] = &m[r][k] - &t;
                    }
                }
            }
        }
        det
    }
}

fn reduce_cyclo<T: Scalar>(mut c: Vec<Ratio<T>>, n: u32) -> Vec<Ratio<T>> {
    let phi = cyclotomic_poly(n);
    let deg = phi.len() - 1;
    while c.len() > deg {
        let top = c.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let k = c.len() - deg;
        for (j, &pj) in phi[..deg].iter().enumerate() {
            c[k + j] = &c[k + j] - &(&top * &rat::<T>(pj));
        }
    }
    c.resize(deg, Ratio::zero());
    c
}

fn poly_trim<T: Scalar>(p: &mut Vec<Ratio<T>>) {
    while p.len() > 1 && p.last().unwrap().is_zero() {
        p.pop();
    }
}

fn poly_divmod<T: Scalar>(a: &[Ratio<T>], b: &[Ratio<T>]) -> (Vec<Ratio<T>>, Vec<Ratio<T>>) {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (vec![Ratio::zero()], r);
    }
    let mut q = vec![Ratio::zero(); r.len() - db];
    let lead = b[db].clone();
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / &lead;
        for j in 0..=db {
            r[i + j] = &r[i + j] - &(&c * &b[j]);
        }
        q[i] = c;
    }
    r.truncate(db.max(1));
    poly_trim(&mut r);
    (q, r)
}

fn poly_mul<T: Scalar>(a: &[Ratio<T>], b: &[Ratio<T>]) -> Vec<Ratio<T>> {
    let mut out = vec![Ratio::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

fn poly_sub<T: Scalar>(a: &[Ratio<T>], b: &[Ratio<T>]) -> Vec<Ratio<T>> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Ratio::zero);
            let y = b.get(i).cloned().unwrap_or_else(Ratio::zero);
            x - y
        })
        .collect()
}

/// Inverse of `a` modulo the irreducible `m` by the extended Euclidean
/// algorithm over Q[x].
fn poly_inverse_mod<T: Scalar>(a: &[Ratio<T>], m: &[Ratio<T>]) -> Vec<Ratio<T>> {
    let (mut r0, mut r1) = (m.to_vec(), a.to_vec());
    poly_trim(&mut r1);
    let (mut t0, mut t1) = (vec![Ratio::zero()], vec![Ratio::one()]);
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divmod(&r0, &r1);
        let t = poly_sub(&t0, &poly_mul(&q, &t1));
        r0 = std::mem::replace(&mut r1, r);
        t0 = std::mem::replace(&mut t1, t);
    }
    // r0 is a nonzero constant.
    let c = r0[0].clone();
    t0.iter().map(|x| x / &c).collect()
}

macro_rules! forward_op {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl<'a, T: Scalar> std::ops::$tr<&'a Nf<T>> for &'a Nf<T> {
            type Output = Nf<T>;
            fn $m(self, rhs: &'a Nf<T>) -> Nf<T> {
                self.$checked(rhs).expect("field mismatch in arithmetic")
            }
        }
        impl<T: Scalar> std::ops::$tr<Nf<T>> for Nf<T> {
            type Output = Nf<T>;
            fn $m(self, rhs: Nf<T>) -> Nf<T> {
                self.$checked(&rhs).expect("field mismatch in arithmetic")
            }
        }
    };
}

forward_op!(Add, add, checked_add);
forward_op!(Sub, sub, checked_sub);
forward_op!(Mul, mul, checked_mul);
forward_op!(Div, div, checked_div);

impl<T: Scalar> std::ops::Neg for Nf<T> {
    type Output = Nf<T>;
    fn neg(self) -> Nf<T> {
        self.neg_ref()
    }
}

impl<T: Scalar> std::ops::Neg for &Nf<T> {
    type Output = Nf<T>;
    fn neg(self) -> Nf<T> {
        self.neg_ref()
    }
}

fn fmt_rat<T: Scalar>(r: &Ratio<T>) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl<T: Scalar> fmt::Display for Nf<T> {
    /// Quadratic elements print as `a/b + c/d*sqrt(D)`, the exchange format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field {
            FieldTag::Rational => write!(f, "{}", fmt_rat(&self.coords[0])),
            FieldTag::Quadratic(d) => {
                if self.coords[1].is_zero() {
                    write!(f, "{}", fmt_rat(&self.coords[0]))
                } else {
                    write!(
                        f,
                        "{} + {}*sqrt({})",
                        fmt_rat(&self.coords[0]),
                        fmt_rat(&self.coords[1]),
                        d
                    )
                }
            }
            FieldTag::Cyclotomic(_) => {
                let terms: Vec<String> = self
                    .coords
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| match i {
                        0 => fmt_rat(c),
                        1 => format!("{}*z", fmt_rat(c)),
                        _ => format!("{}*z^{}", fmt_rat(c), i),
                    })
                    .collect();
                if terms.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", terms.join(" + "))
                }
            }
        }
    }
}

/// The concrete element type used throughout the crate.
pub type NfElement = Nf<BigInt>;

fn parse_rat(s: &str) -> Result<BigRational, NumfieldError> {
    let s = s.trim();
    let bad = || NumfieldError::Parse(format!("bad rational '{s}'"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(a, b))
    } else {
        Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
    }
}

impl NfElement {
    /// Parses the exchange format `a/b + c/d*sqrt(D)` (either term may be
    /// omitted, `-` is accepted between terms) into `field`.
    pub fn parse(s: &str, field: FieldTag) -> Result<Self, NumfieldError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(NumfieldError::Parse("empty element".into()));
        }
        // Split into signed terms at top-level + or - (not inside parentheses
        // and not directly after '(' or '/').
        let mut terms: Vec<String> = Vec::new();
        let mut cur = String::new();
        let mut depth = 0;
        for (i, ch) in compact.chars().enumerate() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            let prev = if i > 0 {
                compact.chars().nth(i - 1)
            } else {
                None
            };
            if (ch == '+' || ch == '-')
                && depth == 0
                && i > 0
                && !matches!(prev, Some('*') | Some('/'))
            {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        let mut x = BigRational::zero();
        let mut y = BigRational::zero();
        let mut d_seen: Option<i64> = None;
        for t in terms {
            let t = t.trim_start_matches('+');
            if let Some(pos) = t.find("sqrt(") {
                let close = t[pos..]
                    .find(')')
                    .ok_or_else(|| NumfieldError::Parse(s.into()))?
                    + pos;
                let d: i64 = t[pos + 5..close]
                    .parse()
                    .map_err(|_| NumfieldError::Parse(s.into()))?;
                d_seen = Some(d);
                let coef = t[..pos].trim_end_matches('*');
                let c = match coef {
                    "" | "+" => BigRational::one(),
                    "-" => -BigRational::one(),
                    other => parse_rat(other)?,
                };
                y += c;
            } else {
                x += parse_rat(t)?;
            }
        }
        match (field, d_seen) {
            (_, None) => Ok(Self::from_rational(field, x)),
            (FieldTag::Quadratic(d), Some(e)) if d == e => Ok(Self::quadratic(d, x, y)),
            (f, Some(e)) => Err(NumfieldError::Parse(format!("sqrt({e}) is not in {f}"))),
        }
    }

    /// Exact sign of a real element (rational or in a real quadratic field,
    /// using the embedding with √d > 0).
    pub fn real_sign(&self) -> Ordering {
        match self.field {
            FieldTag::Rational => self.coords[0].cmp(&BigRational::zero()),
            FieldTag::Quadratic(d) => {
                assert!(d > 0, "real_sign needs a real field");
                let (x, y) = (&self.coords[0], &self.coords[1]);
                let sx = x.cmp(&BigRational::zero());
                let sy = y.cmp(&BigRational::zero());
                if sy == Ordering::Equal {
                    return sx;
                }
                if sx == Ordering::Equal || sx == sy {
                    return sy;
                }
                // Opposite signs: compare x^2 with d*y^2.
                let lhs = x * x;
                let rhs = y * y * BigRational::from_integer(d.into());
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sx,
                    Ordering::Less => sy,
                    Ordering::Equal => Ordering::Equal,
                }
            }
            FieldTag::Cyclotomic(_) => panic!("cyclotomic elements carry no real ordering"),
        }
    }

    /// Square root inside the same field, if one exists.
    pub fn sqrt(&self) -> Option<Self> {
        match self.field {
            FieldTag::Rational => {
                arith::rat_sqrt(&self.coords[0]).map(|r| Self::from_rational(self.field, r))
            }
            FieldTag::Quadratic(d) => {
                if self.is_zero() {
                    return Some(self.clone());
                }
                // (u + v√d)^2 = x + y√d; u^2 and d v^2 are roots of
                // T^2 - x T + d y^2/4, with N(x+y√d) a square.
                let n = arith::rat_sqrt(&self.norm())?;
                let x = &self.coords[0];
                let two = BigRational::from_integer(2.into());
                for s in [n.clone(), -n] {
                    let u2 = (x + &s) / &two;
                    if let Some(u) = arith::rat_sqrt(&u2) {
                        let cand = if u.is_zero() {
                            let v2 = (x - &s) / (&two * BigRational::from_integer(d.into()));
                            arith::rat_sqrt(&v2).map(|v| Self::quadratic(d, BigRational::zero(), v))
                        } else {
                            let v = &self.coords[1] / (&two * &u);
                            Some(Self::quadratic(d, u, v))
                        };
                        if let Some(c) = cand {
                            if &(&c * &c) == self {
                                return Some(c);
                            }
                        }
                    }
                }
                None
            }
            FieldTag::Cyclotomic(_) => None,
        }
    }
}

/// Data of a quadratic field Q(√d) with its maximal-order basis {1, ω}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadraticField {
    pub d: i64,
    pub discriminant: i64,
}

impl QuadraticField {
    /// Validates that `d` is square-free and different from 0 and 1.
    pub fn new(d: i64) -> Result<Self, NumfieldError> {
        if d == 0 || d == 1 {
            return Err(NumfieldError::OutOfRange(format!("d = {d}")));
        }
        let (s, c) = arith::squarefree_part(&BigInt::from(d));
        if !c.is_one() || s != BigInt::from(d) {
            return Err(NumfieldError::OutOfRange(format!("{d} is not square-free")));
        }
        let discriminant = if d.rem_euclid(4) == 1 { d } else { 4 * d };
        Ok(QuadraticField { d, discriminant })
    }

    pub fn tag(&self) -> FieldTag {
        FieldTag::Quadratic(self.d)
    }

    /// True when ω = (1 + √d)/2.
    pub fn half_basis(&self) -> bool {
        self.d.rem_euclid(4) == 1
    }

    /// The ring generator ω.
    pub fn omega(&self) -> NfElement {
        if self.half_basis() {
            let h = BigRational::new(1.into(), 2.into());
            NfElement::quadratic(self.d, h.clone(), h)
        } else {
            NfElement::sqrt_d(self.d)
        }
    }

    /// Trace and norm of ω: ω^2 = t ω − n.
    pub fn omega_trace_norm(&self) -> (BigInt, BigInt) {
        if self.half_basis() {
            (BigInt::one(), BigInt::from((1 - self.d) / 4))
        } else {
            (BigInt::zero(), BigInt::from(-self.d))
        }
    }

    /// Coordinates of `x` in the basis {1, ω}.
    pub fn to_basis(&self, x: &NfElement) -> (BigRational, BigRational) {
        let c = x.embed(self.tag()).expect("element not in this field");
        let (a, b) = (c.coords()[0].clone(), c.coords()[1].clone());
        if self.half_basis() {
            // a + b√d = (a − b) + 2b ω.
            (&a - &b, &b + &b)
        } else {
            (a, b)
        }
    }

    /// The element `a + b ω`.
    pub fn from_basis(&self, a: &BigRational, b: &BigRational) -> NfElement {
        if self.half_basis() {
            let h = b / BigRational::from_integer(2.into());
            NfElement::quadratic(self.d, a + &h, h)
        } else {
            NfElement::quadratic(self.d, a.clone(), b.clone())
        }
    }

    pub fn from_int_basis(&self, a: &BigInt, b: &BigInt) -> NfElement {
        self.from_basis(
            &BigRational::from_integer(a.clone()),
            &BigRational::from_integer(b.clone()),
        )
    }

    /// True when `x` lies in the maximal order.
    pub fn is_integral(&self, x: &NfElement) -> bool {
        let (a, b) = self.to_basis(x);
        a.is_integer() && b.is_integer()
    }

    /// Minkowski bound numerator check helper: floor of the Minkowski bound.
    pub fn minkowski_bound(&self) -> BigInt {
        // M = (2/π)√|D| for imaginary, (1/2)√D for real; bounded above by
        // integer approximations that never undershoot.
        let dabs = BigInt::from(self.discriminant.abs());
        let r = dabs.sqrt() + 1;
        if self.d < 0 {
            // 2/π < 7/10.
            (r * 7) / 10 + 1
        } else {
            r / 2 + 1
        }
    }

    /// Generator of the torsion unit group with its order.
    pub fn torsion_generator(&self) -> (NfElement, u32) {
        match self.d {
            -1 => (NfElement::sqrt_d(-1), 4),
            -3 => {
                let h = BigRational::new(1.into(), 2.into());
                (NfElement::quadratic(-3, h.clone(), h), 6)
            }
            _ => (NfElement::from_int(self.tag(), -1), 2),
        }
    }
}

/// A base field of the classification: Q or a quadratic field, with its
/// ring-of-integers basis {1} or {1, ω}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseField {
    Rational,
    Quadratic(QuadraticField),
}

impl BaseField {
    /// Q for `d = 1`, otherwise Q(√d).
    pub fn from_d(d: i64) -> Result<Self, NumfieldError> {
        if d == 1 {
            Ok(BaseField::Rational)
        } else {
            Ok(BaseField::Quadratic(QuadraticField::new(d)?))
        }
    }

    /// Parses `Q`, `Q(sqrt(d))` or `Q(i)`.
    pub fn parse(s: &str) -> Result<Self, NumfieldError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match t.as_str() {
            "Q" => Ok(BaseField::Rational),
            "Q(i)" => Self::from_d(-1),
            _ => {
                let inner = t
                    .strip_prefix("Q(sqrt(")
                    .and_then(|r| r.strip_suffix("))"))
                    .ok_or_else(|| NumfieldError::Parse(format!("unknown field '{s}'")))?;
                let d: i64 = inner
                    .parse()
                    .map_err(|_| NumfieldError::Parse(format!("unknown field '{s}'")))?;
                Self::from_d(d)
            }
        }
    }

    pub fn tag(&self) -> FieldTag {
        match self {
            BaseField::Rational => FieldTag::Rational,
            BaseField::Quadratic(k) => k.tag(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            BaseField::Rational => 1,
            BaseField::Quadratic(_) => 2,
        }
    }

    /// Field discriminant (1 for Q).
    pub fn discriminant(&self) -> i64 {
        match self {
            BaseField::Rational => 1,
            BaseField::Quadratic(k) => k.discriminant,
        }
    }

    pub fn quadratic(&self) -> Option<&QuadraticField> {
        match self {
            BaseField::Rational => None,
            BaseField::Quadratic(k) => Some(k),
        }
    }

    pub fn is_imaginary(&self) -> bool {
        matches!(self, BaseField::Quadratic(k) if k.d < 0)
    }

    /// Coordinates in the ring basis, constant term first.
    pub fn coords(&self, x: &NfElement) -> Vec<BigRational> {
        match self {
            BaseField::Rational => vec![x.as_rational().expect("element is not rational")],
            BaseField::Quadratic(k) => {
                let (a, b) = k.to_basis(x);
                vec![a, b]
            }
        }
    }

    /// The element with the given ring-basis coordinates; missing trailing
    /// coordinates are zero.
    pub fn element(&self, c: &[BigRational]) -> NfElement {
        match self {
            BaseField::Rational => NfElement::from_rational(FieldTag::Rational, c[0].clone()),
            BaseField::Quadratic(k) => {
                let b = c.get(1).cloned().unwrap_or_else(BigRational::zero);
                k.from_basis(&c[0], &b)
            }
        }
    }

    pub fn element_int(&self, c: &[BigInt]) -> NfElement {
        let r: Vec<BigRational> = c
            .iter()
            .map(|x| BigRational::from_integer(x.clone()))
            .collect();
        self.element(&r)
    }

    pub fn int(&self, x: i64) -> NfElement {
        NfElement::from_int(self.tag(), x)
    }

    pub fn rational(&self, x: BigRational) -> NfElement {
        NfElement::from_rational(self.tag(), x)
    }

    /// The ring basis {1} or {1, ω}.
    pub fn basis(&self) -> Vec<NfElement> {
        match self {
            BaseField::Rational => vec![self.int(1)],
            BaseField::Quadratic(k) => vec![self.int(1), k.omega()],
        }
    }

    /// Brings an element of Q or of this field into this field.
    pub fn lift(&self, x: &NfElement) -> Result<NfElement, NumfieldError> {
        x.embed(self.tag())
    }

    pub fn contains(&self, x: &NfElement) -> bool {
        x.field() == self.tag() || x.is_rational()
    }

    pub fn is_integral(&self, x: &NfElement) -> bool {
        self.coords(x).iter().all(|c| c.is_integer())
    }

    pub fn norm(&self, x: &NfElement) -> BigRational {
        match self {
            BaseField::Rational => x.as_rational().expect("element is not rational"),
            BaseField::Quadratic(_) => self.lift(x).expect("element outside field").norm(),
        }
    }

    pub fn conj(&self, x: &NfElement) -> NfElement {
        match self {
            BaseField::Rational => x.clone(),
            BaseField::Quadratic(_) => self.lift(x).expect("element outside field").conj(),
        }
    }

    /// Integral element with the given integer ring-basis coordinates of
    /// `x` times the least common denominator, together with that
    /// denominator.
    pub fn split_denominator(&self, x: &NfElement) -> (Vec<BigInt>, BigInt) {
        let c = self.coords(x);
        let den = c.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let num = c
            .iter()
            .map(|r| (r * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        (num, den)
    }

    /// Torsion units of the ring of integers.
    pub fn torsion_units(&self) -> Vec<NfElement> {
        let (g, n) = match self {
            BaseField::Rational => (self.int(-1), 2),
            BaseField::Quadratic(k) => k.torsion_generator(),
        };
        (0..n).map(|i| g.pow(i as i64).unwrap()).collect()
    }

    /// Generators of the unit group: a torsion generator and, for real
    /// quadratic fields, the fundamental unit.
    pub fn unit_generators(&self) -> Vec<NfElement> {
        match self {
            BaseField::Rational => vec![self.int(-1)],
            BaseField::Quadratic(k) => {
                let mut v = vec![k.torsion_generator().0];
                if k.d > 0 {
                    v.push(fundamental_unit(k).expect("real field has a fundamental unit"));
                }
                v
            }
        }
    }
}

impl fmt::Display for BaseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Result of classifying a cyclotomic integer as a prime element or a unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum PrimeClass {
    Prime(u64),
    Unit,
}

/// Classifies 1 − ζ_n: a prime over p exactly when n is a power of p.
/// The norm Φ_n(1) is evaluated by exact polynomial arithmetic.
pub fn one_minus_zeta_class(n: u32) -> Result<PrimeClass, NumfieldError> {
    if n < 2 {
        return Err(NumfieldError::OutOfRange(format!("n = {n} < 2")));
    }
    let value: i64 = cyclotomic_poly(n).iter().sum();
    classify_norm(value.unsigned_abs())
}

fn classify_norm(v: u64) -> Result<PrimeClass, NumfieldError> {
    if v == 1 {
        Ok(PrimeClass::Unit)
    } else if arith::is_prime(v) {
        Ok(PrimeClass::Prime(v))
    } else {
        Err(NumfieldError::OutOfRange(format!(
            "norm {v} is neither 1 nor prime"
        )))
    }
}

/// The unit (ζ^m − 1)/(ζ − 1) = 1 + ζ + ⋯ + ζ^{m−1} of Z[ζ_n].
pub fn unit_congruent_to(m: i64, n: u32) -> Result<NfElement, NumfieldError> {
    if n < 2 {
        return Err(NumfieldError::OutOfRange(format!("n = {n} < 2")));
    }
    if m.gcd(&(n as i64)) != 1 {
        return Err(NumfieldError::NotCoprime(m, n as i64));
    }
    let k = m.rem_euclid(n as i64) as usize;
    let coords = vec![BigRational::one(); k];
    Ok(NfElement::from_coords(FieldTag::Cyclotomic(n), coords))
}

/// Classes of ρ − 2 and ρ + 2 for ρ = ζ_n + ζ_n^{−1} in the real cyclotomic
/// subfield, and whether they are associates.
pub fn rho_pm2_classification(n: u32) -> Result<(PrimeClass, PrimeClass, bool), NumfieldError> {
    if n < 3 {
        return Err(NumfieldError::OutOfRange(format!("n = {n} < 3")));
    }
    let z = NfElement::zeta(n);
    let rho = &z + &z.conj();
    let two = NfElement::from_int(rho.field(), 2);
    let classify = |x: NfElement| -> Result<PrimeClass, NumfieldError> {
        // Norm over Q(ζ) is the square of the norm over the real subfield.
        let full = x.norm();
        let real =
            arith::rat_sqrt(&full.abs()).ok_or_else(|| NumfieldError::OutOfRange("norm".into()))?;
        classify_norm(real.to_integer().to_u64().unwrap())
    };
    let minus = classify(&rho - &two)?;
    let plus = classify(&rho + &two)?;
    let assoc = matches!((minus, plus), (PrimeClass::Prime(p), PrimeClass::Prime(q)) if p == q);
    Ok((minus, plus, assoc))
}

/// The fundamental unit ε > 1 of a real quadratic field, from the continued
/// fraction expansion of ω.
pub fn fundamental_unit(k: &QuadraticField) -> Result<NfElement, NumfieldError> {
    if k.d < 0 {
        return Err(NumfieldError::OutOfRange(
            "imaginary field has only torsion units".into(),
        ));
    }
    let d = BigInt::from(k.d);
    let s = d.sqrt();
    // ω = (P + √D)/Q with integer recurrences.
    let (mut p, mut q) = if k.half_basis() {
        (BigInt::one(), BigInt::from(2))
    } else {
        (BigInt::zero(), BigInt::one())
    };
    let (t, nw) = k.omega_trace_norm();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    for _ in 0..100_000 {
        let a = if q.is_positive() {
            (&p + &s).div_floor(&q)
        } else {
            (&p + &s + BigInt::one()).div_floor(&q)
        };
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        // Candidate unit h − k ω; its norm is h^2 − h k t + k^2 n.
        let norm = &h1 * &h1 - &h1 * &k1 * &t + &k1 * &k1 * &nw;
        if norm.abs().is_one() {
            let u = k.from_int_basis(&h1, &(-&k1));
            return Ok(normalize_unit(&u));
        }
        p = &a * &q - &p;
        q = (&d - &p * &p) / &q;
    }
    Err(NumfieldError::OutOfRange(
        "continued fraction did not terminate".into(),
    ))
}

/// Among ±u, ±u^{−1} returns the one greater than 1.
fn normalize_unit(u: &NfElement) -> NfElement {
    let one = NfElement::one(u.field());
    let inv = u.inv().unwrap();
    for c in [u.clone(), -u, inv.clone(), -&inv] {
        if (&c - &one).real_sign() == Ordering::Greater {
            return c;
        }
    }
    unreachable!("a unit different from ±1 has a representative above 1")
}

/// ρ = 2cos(2πk/n) as an exact element of its field of definition, which
/// must be Q or a quadratic field. Returns the field tag and ρ.
pub fn dihedral_rho(n: u32, k: u32) -> Result<NfElement, NumfieldError> {
    if n < 3 {
        return Err(NumfieldError::OutOfRange(format!("n = {n} < 3")));
    }
    if (k as i64).gcd(&(n as i64)) != 1 {
        return Err(NumfieldError::NotCoprime(k as i64, n as i64));
    }
    let kk = k % n;
    let kp = kk.min(n - kk);
    let deg = totient(n) / 2;
    let z = NfElement::zeta(n);
    let r = &z.pow(kp as i64)? + &z.pow(-(kp as i64))?;
    match deg {
        1 => Ok(NfElement::from_rational(
            FieldTag::Rational,
            r.as_rational().expect("rational"),
        )),
        2 => {
            // The other conjugate comes from a unit m not in {±1} mod n.
            let m = (2..n)
                .find(|m| (*m as i64).gcd(&(n as i64)) == 1 && *m != n - 1)
                .unwrap();
            let jp = {
                let j = (kp * m) % n;
                j.min(n - j)
            };
            let r2 = &z.pow(jp as i64)? + &z.pow(-(jp as i64))?;
            let s = (&r + &r2).as_rational().unwrap();
            let pr = (&r * &r2).as_rational().unwrap();
            let disc = &s * &s - &pr * BigRational::from_integer(4.into());
            let (dn, dd) = (disc.numer().clone(), disc.denom().clone());
            let (sf, c) = arith::squarefree_part(&(&dn * &dd));
            let d = sf.to_i64().unwrap();
            let coef = BigRational::new(c, dd) / BigRational::from_integer(2.into());
            let half_s = s / BigRational::from_integer(2.into());
            // Smaller index means larger cosine, hence the larger root.
            let sign = if kp < jp { coef } else { -coef };
            Ok(NfElement::quadratic(d, half_s, sign))
        }
        _ => Err(NumfieldError::OutOfRange(format!(
            "field of definition of degree {deg} > 2"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        for n in 1..40 {
            assert_eq!(cyclotomic_poly(n).len() - 1, totient(n) as usize);
        }
    }

    #[test]
    fn quadratic_norms() {
        let x = NfElement::quadratic(-5, q(1, 1), q(1, 1));
        assert_eq!(x.norm(), q(6, 1));
        assert_eq!(
            NfElement::sqrt_d(-5).conj(),
            NfElement::quadratic(-5, q(0, 1), q(-1, 1))
        );
        let eta = NfElement::quadratic(5, q(1, 2), q(1, 2));
        assert_eq!(eta.norm(), q(-1, 1));
    }

    #[test]
    fn zeta_identities() {
        let z = NfElement::zeta(4);
        assert_eq!(&z * &z, NfElement::from_int(FieldTag::Cyclotomic(4), -1));
        let z9 = NfElement::zeta(9);
        assert_eq!(z9.pow(9).unwrap(), NfElement::one(FieldTag::Cyclotomic(9)));
        assert_eq!(
            &z9 * &z9.inv().unwrap(),
            NfElement::one(FieldTag::Cyclotomic(9))
        );
        assert_eq!(z9.conj(), z9.pow(-1).unwrap());
    }

    #[test]
    fn one_minus_zeta_and_congruent_units() {
        assert_eq!(one_minus_zeta_class(4).unwrap(), PrimeClass::Prime(2));
        assert_eq!(one_minus_zeta_class(6).unwrap(), PrimeClass::Unit);
        assert_eq!(one_minus_zeta_class(9).unwrap(), PrimeClass::Prime(3));
        assert!(one_minus_zeta_class(1).is_err());
        assert_eq!(
            unit_congruent_to(1, 5).unwrap(),
            NfElement::one(FieldTag::Cyclotomic(5))
        );
        assert_eq!(unit_congruent_to(3, 4).unwrap(), NfElement::zeta(4));
        let u = unit_congruent_to(2, 9).unwrap();
        assert_eq!(
            u,
            &NfElement::one(FieldTag::Cyclotomic(9)) + &NfElement::zeta(9)
        );
        assert_eq!(u.norm().abs(), q(1, 1));
        assert!(unit_congruent_to(3, 9).is_err());
        assert_eq!(
            rho_pm2_classification(5).unwrap(),
            (PrimeClass::Prime(5), PrimeClass::Unit, false)
        );
        assert_eq!(
            rho_pm2_classification(12).unwrap(),
            (PrimeClass::Unit, PrimeClass::Unit, false)
        );
        assert_eq!(
            rho_pm2_classification(8).unwrap(),
            (PrimeClass::Prime(2), PrimeClass::Prime(2), true)
        );
        assert_eq!(
            rho_pm2_classification(10).unwrap(),
            (PrimeClass::Unit, PrimeClass::Prime(5), false)
        );
    }

    #[test]
    fn fundamental_units() {
        let f = |d| fundamental_unit(&QuadraticField::new(d).unwrap()).unwrap();
        assert_eq!(f(5), NfElement::quadratic(5, q(1, 2), q(1, 2)));
        assert_eq!(f(2), NfElement::quadratic(2, q(1, 1), q(1, 1)));
        assert_eq!(f(3), NfElement::quadratic(3, q(2, 1), q(1, 1)));
        assert_eq!(f(13), NfElement::quadratic(13, q(3, 2), q(1, 2)));
        assert!(fundamental_unit(&QuadraticField::new(-5).unwrap()).is_err());
    }

    #[test]
    fn dihedral_rhos() {
        assert_eq!(
            dihedral_rho(3, 1).unwrap(),
            NfElement::from_int(FieldTag::Rational, -1)
        );
        assert_eq!(
            dihedral_rho(4, 1).unwrap(),
            NfElement::from_int(FieldTag::Rational, 0)
        );
        assert_eq!(
            dihedral_rho(5, 1).unwrap(),
            NfElement::quadratic(5, q(-1, 2), q(1, 2))
        );
        assert_eq!(
            dihedral_rho(5, 2).unwrap(),
            NfElement::quadratic(5, q(-1, 2), q(-1, 2))
        );
        assert_eq!(
            dihedral_rho(8, 1).unwrap(),
            NfElement::quadratic(2, q(0, 1), q(1, 1))
        );
        assert_eq!(
            dihedral_rho(12, 1).unwrap(),
            NfElement::quadratic(3, q(0, 1), q(1, 1))
        );
        assert_eq!(
            dihedral_rho(10, 1).unwrap(),
            NfElement::quadratic(5, q(1, 2), q(1, 2))
        );
    }

    #[test]
    fn parse_roundtrip() {
        let f = FieldTag::Quadratic(-5);
        let x = NfElement::parse("3 + 1*sqrt(-5)", f).unwrap();
        assert_eq!(x, NfElement::quadratic(-5, q(3, 1), q(1, 1)));
        assert_eq!(NfElement::parse(&x.to_string(), f).unwrap(), x);
        assert_eq!(
            NfElement::parse("-1/2*sqrt(-5)", f).unwrap(),
            NfElement::quadratic(-5, q(0, 1), q(-1, 2))
        );
        assert_eq!(
            NfElement::parse("1/2 - 3*sqrt(-5)", f).unwrap(),
            NfElement::quadratic(-5, q(1, 2), q(-3, 1))
        );
        assert!(NfElement::parse("sqrt(3)", f).is_err());
    }

    #[test]
    fn square_roots() {
        let x = NfElement::quadratic(5, q(3, 2), q(1, 2));
        let r = x.sqrt().unwrap();
        assert_eq!(&r * &r, x);
        assert!(NfElement::from_int(FieldTag::Quadratic(-5), -1)
            .sqrt()
            .is_none());
    }

    #[test]
    fn generic_over_i128() {
        let a: Nf<i128> = Nf::quadratic(-5, Ratio::from_integer(1), Ratio::from_integer(1));
        assert_eq!(a.norm(), Ratio::from_integer(6));
        let b = a.inv().unwrap();
        assert!((&a * &b).is_one());
    }
}
