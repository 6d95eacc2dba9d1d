//! Fractional ideals of Q and of quadratic fields, finite places with exact
//! valuations and residue maps, class groups through binary quadratic forms,
//! square-class tests, relative quadratic ramification, and the Chinese
//! remainder approximation used to build global elements from local data.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith;
use crate::numfield::{BaseField, NfElement, NumfieldError};

/// Default bound on |disc| for class group computations.
pub const DEFAULT_DISC_BOUND: i64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdealError {
    #[error("the zero ideal is not a fractional ideal")]
    ZeroIdeal,
    #[error("valuation of zero is infinite")]
    InfiniteValuation,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("|discriminant| = {0} exceeds the class group bound {1}")]
    BoundExceeded(i64, i64),
    #[error("element is a square, the extension is trivial")]
    SquareDelta,
    #[error("places must be pairwise distinct")]
    RepeatedPlace,
    #[error("element has negative valuation at the place")]
    NotLocallyIntegral,
    #[error(transparent)]
    Numfield(#[from] NumfieldError),
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn rint(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

/// Ideal coordinates: (ω-coefficient, constant) for quadratic fields so that
/// the row Hermite normal form reads {c ω + b, a}; the single coordinate for Q.
fn rev_coords(field: &BaseField, x: &NfElement) -> Vec<BigRational> {
    let mut c = field.coords(x);
    c.reverse();
    c
}

fn from_rev(field: &BaseField, v: &[BigInt]) -> NfElement {
    let mut c = v.to_vec();
    c.reverse();
    field.element_int(&c)
}

/// A nonzero fractional ideal `(1/den) L` with `L` an integral ideal given by
/// the Hermite normal form of a Z-basis and `den` minimal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FracIdeal {
    field: BaseField,
    rows: Vec<Vec<BigInt>>,
    den: BigInt,
}

impl FracIdeal {
    fn normalize(
        field: &BaseField,
        rows: Vec<Vec<BigInt>>,
        den: BigInt,
    ) -> Result<Self, IdealError> {
        let n = field.degree();
        let h = arith::hnf_rows(&rows, n);
        if h.len() < n {
            return Err(IdealError::ZeroIdeal);
        }
        let content = h.iter().flatten().fold(BigInt::zero(), |g, x| g.gcd(x));
        let g = content.gcd(&den);
        let rows = h
            .into_iter()
            .map(|r| r.into_iter().map(|x| x / &g).collect())
            .collect();
        Ok(FracIdeal {
            field: field.clone(),
            rows,
            den: den / g,
        })
    }

    /// The ideal generated over the ring of integers by `gens`.
    pub fn from_generators(field: &BaseField, gens: &[NfElement]) -> Result<Self, IdealError> {
        let basis = field.basis();
        let mut vecs: Vec<Vec<BigRational>> = Vec::new();
        for g in gens {
            let g = field.lift(g)?;
            for b in &basis {
                vecs.push(rev_coords(field, &(&g * b)));
            }
        }
        let den = vecs
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let dr = rint(&den);
        let rows = vecs
            .iter()
            .map(|v| v.iter().map(|r| (r * &dr).to_integer()).collect())
            .collect();
        Self::normalize(field, rows, den)
    }

    pub fn principal(field: &BaseField, x: &NfElement) -> Result<Self, IdealError> {
        Self::from_generators(field, std::slice::from_ref(x))
    }

    /// The unit ideal O_K.
    pub fn unit(field: &BaseField) -> Self {
        Self::principal(field, &field.int(1)).unwrap()
    }

    pub fn field(&self) -> &BaseField {
        &self.field
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    /// A Z-basis of the ideal; for quadratic fields ordered as {a/den, (b + c ω)/den}.
    pub fn z_basis(&self) -> Vec<NfElement> {
        let inv = BigRational::new(BigInt::one(), self.den.clone());
        let sc = self.field.rational(inv);
        let mut v: Vec<NfElement> = self
            .rows
            .iter()
            .map(|r| &from_rev(&self.field, r) * &sc)
            .collect();
        v.reverse();
        v
    }

    /// The integers (a, b, c) with `den·I = Z a + Z (b + c ω)`.
    pub fn abc(&self) -> (BigInt, BigInt, BigInt) {
        match self.field {
            BaseField::Rational => (self.rows[0][0].clone(), BigInt::zero(), BigInt::one()),
            BaseField::Quadratic(_) => (
                self.rows[1][1].clone(),
                self.rows[0][1].clone(),
                self.rows[0][0].clone(),
            ),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_unit_ideal(&self) -> bool {
        *self == Self::unit(&self.field)
    }

    /// Absolute norm.
    pub fn norm(&self) -> BigRational {
        let det = self
            .rows
            .iter()
            .enumerate()
            .fold(BigInt::one(), |acc, (i, r)| acc * &r[i]);
        let d = num_traits::pow(self.den.clone(), self.field.degree());
        BigRational::new(det, d)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let den = &self.den * &other.den;
        let rows = match &self.field {
            BaseField::Rational => vec![vec![&self.rows[0][0] * &other.rows[0][0]]],
            BaseField::Quadratic(q) => {
                let (t, n) = q.omega_trace_norm();
                // Rows hold (ω-coefficient, constant); multiply in Z[ω].
                let times = |u: &[BigInt], v: &[BigInt]| -> Vec<BigInt> {
                    let (y1, x1, y2, x2) = (&u[0], &u[1], &v[0], &v[1]);
                    let c = x1 * x2 - &n * y1 * y2;
                    let w = x1 * y2 + x2 * y1 + &t * y1 * y2;
                    vec![w, c]
                };
                let omega = vec![BigInt::one(), BigInt::zero()];
                let mut out = Vec::with_capacity(8);
                for u in &self.rows {
                    for v in &other.rows {
                        let pr = times(u, v);
                        out.push(times(&pr, &omega));
                        out.push(pr);
                    }
                }
                out
            }
        };
        Self::normalize(&self.field, rows, den).expect("product of nonzero ideals")
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut gens = self.z_basis();
        gens.extend(other.z_basis());
        Self::from_generators(&self.field, &gens).expect("sum of nonzero ideals")
    }

    /// Image under the nontrivial automorphism.
    pub fn conj(&self) -> Self {
        let gens: Vec<NfElement> = self.z_basis().iter().map(|x| self.field.conj(x)).collect();
        Self::from_generators(&self.field, &gens).unwrap()
    }

    pub fn inv(&self) -> Self {
        let n = self.norm();
        let sc = self.field.rational(n.recip());
        match self.field {
            BaseField::Rational => Self::principal(&self.field, &sc).unwrap(),
            BaseField::Quadratic(_) => self.conj().scale(&sc),
        }
    }

    /// The ideal x·I.
    pub fn scale(&self, x: &NfElement) -> Self {
        let gens: Vec<NfElement> = self.z_basis().iter().map(|g| g * x).collect();
        Self::from_generators(&self.field, &gens).unwrap()
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    pub fn pow(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.inv() } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Self::unit(&self.field);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Membership test by triangular solve against the HNF basis.
    pub fn contains(&self, x: &NfElement) -> bool {
        if !self.field.contains(x) {
            return false;
        }
        let v = rev_coords(&self.field, x);
        let dr = rint(&self.den);
        let mut w: Vec<BigRational> = v.iter().map(|r| r * &dr).collect();
        for (i, row) in self.rows.iter().enumerate() {
            if !w[i].is_integer() {
                return false;
            }
            let (q, r) = w[i].to_integer().div_rem(&row[i]);
            if !r.is_zero() {
                return false;
            }
            for (j, x) in row.iter().enumerate() {
                w[j] -= rint(&(&q * x));
            }
        }
        w.iter().all(|x| x.is_zero())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.z_basis().iter().all(|x| other.contains(x))
    }

    /// Reduces an integral element modulo this integral ideal to a canonical
    /// representative.
    pub fn reduce(&self, x: &NfElement) -> NfElement {
        assert!(self.is_integral());
        let v = rev_coords(&self.field, x);
        let mut w: Vec<BigInt> = v.iter().map(|r| r.to_integer()).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let q = w[i].div_floor(&row[i]);
            for (j, y) in row.iter().enumerate() {
                w[j] -= &q * y;
            }
        }
        from_rev(&self.field, &w)
    }

    /// Valuation of the ideal at a place.
    pub fn valuation(&self, place: &PrimePlace) -> i64 {
        self.z_basis()
            .iter()
            .filter(|x| !x.is_zero())
            .map(|x| place.valuation(x).unwrap())
            .min()
            .unwrap()
    }

    /// Prime factorization as (place, exponent) pairs.
    pub fn factor(&self) -> Vec<(PrimePlace, i64)> {
        let n = self.norm();
        let mut primes: Vec<u64> = Vec::new();
        for part in [n.numer(), n.denom()] {
            for (p, _) in arith::factorize_big(part) {
                primes.push(p.to_u64().expect("prime too large"));
            }
        }
        primes.sort_unstable();
        primes.dedup();
        let mut out = Vec::new();
        for p in primes {
            for pl in factor_rational_prime(p, &self.field).unwrap() {
                let v = self.valuation(&pl);
                if v != 0 {
                    out.push((pl, v));
                }
            }
        }
        out
    }

    /// Product of place powers.
    pub fn from_factors(field: &BaseField, factors: &[(PrimePlace, i64)]) -> Self {
        factors
            .iter()
            .fold(Self::unit(field), |acc, (pl, e)| acc.mul(&pl.ideal.pow(*e)))
    }
}

impl fmt::Display for FracIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.z_basis().iter().map(|x| x.to_string()).collect();
        write!(f, "<{}>", g.join(", "))
    }
}

/// Decomposition type of a place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    /// The p-adic place of Q.
    Rational,
    Split,
    Inert,
    Ramified,
}

/// A finite place of Q or of a quadratic field.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimePlace {
    pub field: BaseField,
    pub p: u64,
    pub kind: PlaceKind,
    pub ideal: FracIdeal,
    pub uniformizer: NfElement,
    pub residue_size: u64,
    /// For split and ramified places, the integer r with ω ≡ r modulo the place.
    pub omega_root: Option<u64>,
}

/// The places above the rational prime `p`, with split places ordered by
/// their residue root of ω.
pub fn factor_rational_prime(p: u64, field: &BaseField) -> Result<Vec<PrimePlace>, IdealError> {
    if !arith::is_prime(p) {
        return Err(IdealError::NotPrime(p));
    }
    let k = match field {
        BaseField::Rational => {
            return Ok(vec![PrimePlace {
                field: field.clone(),
                p,
                kind: PlaceKind::Rational,
                ideal: FracIdeal::principal(field, &field.int(p as i64))?,
                uniformizer: field.int(p as i64),
                residue_size: p,
                omega_root: None,
            }]);
        }
        BaseField::Quadratic(k) => k,
    };
    let (t, n) = k.omega_trace_norm();
    let pb = big(p as i64);
    let roots: Vec<u64> = (0..p)
        .filter(|&r| {
            (big(r as i64) * big(r as i64) - &t * big(r as i64) + &n)
                .mod_floor(&pb)
                .is_zero()
        })
        .collect();
    let omega = k.omega();
    let kron = arith::kronecker(&big(k.discriminant), p);
    let pe = field.int(p as i64);
    let place = |kind, ideal, unif, size, root| PrimePlace {
        field: field.clone(),
        p,
        kind,
        ideal,
        uniformizer: unif,
        residue_size: size,
        omega_root: root,
    };
    Ok(match kron {
        1 => roots
            .iter()
            .map(|&r| {
                let id =
                    FracIdeal::from_generators(field, &[pe.clone(), &omega - &field.int(r as i64)])
                        .unwrap();
                place(PlaceKind::Split, id, pe.clone(), p, Some(r))
            })
            .collect(),
        -1 => vec![place(
            PlaceKind::Inert,
            FracIdeal::principal(field, &pe)?,
            pe.clone(),
            p * p,
            None,
        )],
        _ => {
            let r = roots[0];
            let id =
                FracIdeal::from_generators(field, &[pe.clone(), &omega - &field.int(r as i64)])
                    .unwrap();
            let sd = NfElement::sqrt_d(k.d);
            let unif = if p == 2 && k.d.rem_euclid(4) == 3 {
                &field.int(1) + &sd
            } else {
                sd
            };
            vec![place(PlaceKind::Ramified, id, unif, p, Some(r))]
        }
    })
}

impl PrimePlace {
    /// Ramification index over Q.
    pub fn e(&self) -> i64 {
        if self.kind == PlaceKind::Ramified {
            2
        } else {
            1
        }
    }

    /// Exact valuation, normalized so that the uniformizer has valuation 1.
    pub fn valuation(&self, x: &NfElement) -> Result<i64, IdealError> {
        if x.is_zero() {
            return Err(IdealError::InfiniteValuation);
        }
        let pb = big(self.p as i64);
        let (num, den) = self.field.split_denominator(x);
        let vden = arith::val_int(&den, &pb);
        if self.kind == PlaceKind::Rational {
            return Ok(arith::val_int(&num[0], &pb) - vden);
        }
        let k = num
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| arith::val_int(c, &pb))
            .min()
            .unwrap();
        let pk = num_traits::pow(pb.clone(), k as usize);
        let (u, v) = (&num[0] / &pk, &num[1] / &pk);
        let q = self.field.quadratic().unwrap();
        let (t, n) = q.omega_trace_norm();
        let norm = &u * &u + &t * &u * &v + &n * &v * &v;
        Ok(match self.kind {
            PlaceKind::Inert => k - vden,
            PlaceKind::Ramified => 2 * k + arith::val_int(&norm, &pb) - 2 * vden,
            PlaceKind::Split => {
                let r = big(self.omega_root.unwrap() as i64);
                let extra = if (&u + &v * r).mod_floor(&pb).is_zero() {
                    arith::val_int(&norm, &pb)
                } else {
                    0
                };
                k + extra - vden
            }
            PlaceKind::Rational => unreachable!(),
        })
    }

    /// Valuation computed from membership in powers of the prime ideal; an
    /// independent check of [`PrimePlace::valuation`].
    pub fn valuation_by_membership(&self, x: &NfElement) -> Result<i64, IdealError> {
        if x.is_zero() {
            return Err(IdealError::InfiniteValuation);
        }
        let mut k = -self.e() * 2 * self.field.split_denominator(x).1.bits() as i64 - 2;
        while FracIdeal::principal(&self.field, x)?.is_subset_of(&self.ideal.pow(k + 1))
            || !self.ideal.pow(k).contains(x)
        {
            k += 1;
        }
        Ok(k)
    }

    /// Valuation with +∞ represented by `None`.
    pub fn val_or_inf(&self, x: &NfElement) -> Option<i64> {
        self.valuation(x).ok()
    }

    /// A p-adic root of the minimal polynomial of ω congruent to the residue
    /// root of this split place, modulo p^m.
    pub fn omega_root_mod(&self, m: u32) -> BigInt {
        let q = self
            .field
            .quadratic()
            .expect("split place of a quadratic field");
        let (t, n) = q.omega_trace_norm();
        let pb = big(self.p as i64);
        let modulus = num_traits::pow(pb.clone(), m as usize);
        let mut r = big(self.omega_root.unwrap() as i64);
        let mut prec = 1u32;
        while prec < m {
            prec = (2 * prec).min(m);
            let md = num_traits::pow(pb.clone(), prec as usize);
            let f = &r * &r - &t * &r + &n;
            let df = &r * 2 - &t;
            let inv = arith::modinv(&df, &md).expect("simple root");
            r = (&r - f * inv).mod_floor(&md);
        }
        r.mod_floor(&modulus)
    }

    /// The fixed residue representatives: {0, …, p−1}, and r0 + r1 ω for
    /// inert places, indexed by r0 + p·r1.
    pub fn residues(&self) -> Vec<NfElement> {
        let p = self.p as i64;
        if self.kind == PlaceKind::Inert {
            let w = self.field.quadratic().unwrap().omega();
            (0..p * p)
                .map(|i| &self.field.int(i % p) + &(&self.field.int(i / p) * &w))
                .collect()
        } else {
            (0..p).map(|i| self.field.int(i)).collect()
        }
    }

    /// Index into [`PrimePlace::residues`] of the residue of a locally
    /// integral element.
    pub fn residue_index(&self, x: &NfElement) -> Result<usize, IdealError> {
        if x.is_zero() {
            return Ok(0);
        }
        if self.valuation(x)? < 0 {
            return Err(IdealError::NotLocallyIntegral);
        }
        let pb = big(self.p as i64);
        let (num, den) = self.field.split_denominator(x);
        let k = arith::val_int(&den, &pb);
        let pk = num_traits::pow(pb.clone(), k as usize);
        let qinv = arith::modinv(&(&den / &pk), &pb).unwrap();
        let red = |z: BigInt| (z * &qinv).mod_floor(&pb).to_usize().unwrap();
        Ok(match self.kind {
            PlaceKind::Rational => red(&num[0] / &pk),
            PlaceKind::Inert => {
                let (u, v) = (&num[0] / &pk, &num[1] / &pk);
                red(u) + self.p as usize * red(v)
            }
            PlaceKind::Ramified => {
                let (u, v) = (&num[0] / &pk, &num[1] / &pk);
                red(u + v * big(self.omega_root.unwrap() as i64))
            }
            PlaceKind::Split => {
                let r = self.omega_root_mod(k as u32 + 1);
                let s = &num[0] + &num[1] * r;
                red(s / &pk)
            }
        })
    }

    pub fn residue(&self, x: &NfElement) -> Result<NfElement, IdealError> {
        Ok(self.residues()[self.residue_index(x)?].clone())
    }

    /// Short human-readable name.
    pub fn name(&self) -> String {
        match self.kind {
            PlaceKind::Rational | PlaceKind::Inert => format!("({})", self.p),
            PlaceKind::Ramified => format!("P{}", self.p),
            PlaceKind::Split => format!("P{}_{}", self.p, self.omega_root.unwrap()),
        }
    }
}

impl fmt::Display for PrimePlace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name(), self.ideal)
    }
}

/// Finds the place of `field` whose name matches `name` (as printed by
/// [`PrimePlace::name`]) or whose rational prime is `name` when unique.
pub fn place_by_name(field: &BaseField, name: &str) -> Option<PrimePlace> {
    let digits: String = name
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    let p: u64 = digits.parse().ok()?;
    let places = factor_rational_prime(p, field).ok()?;
    if let Some(pl) = places.iter().find(|pl| pl.name() == name) {
        return Some(pl.clone());
    }
    (places.len() == 1).then(|| places[0].clone())
}

/// A binary quadratic form a x² + b x y + c y².
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Form {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

type Mat2i = [[BigInt; 2]; 2];

fn mat_id() -> Mat2i {
    [
        [BigInt::one(), BigInt::zero()],
        [BigInt::zero(), BigInt::one()],
    ]
}

fn mat_mul(m: &Mat2i, n: &Mat2i) -> Mat2i {
    let e = |i: usize, j: usize| &m[i][0] * &n[0][j] + &m[i][1] * &n[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

impl Form {
    pub fn discriminant(&self) -> BigInt {
        &self.b * &self.b - &self.a * &self.c * 4
    }

    /// Substitution x = X + tY.
    fn translate(&self, t: &BigInt) -> Form {
        Form {
            a: self.a.clone(),
            b: &self.b + &self.a * t * 2,
            c: &self.a * t * t + &self.b * t + &self.c,
        }
    }

    /// Substitution (x, y) = (−Y, X + tY).
    fn rho_with(&self, t: &BigInt) -> Form {
        Form {
            a: self.c.clone(),
            b: -&self.b + &self.c * t * 2,
            c: &self.a - &self.b * t + &self.c * t * t,
        }
    }

    fn is_reduced_definite(&self) -> bool {
        self.b.abs() <= self.a
            && self.a <= self.c
            && (!(self.b.abs() == self.a || self.a == self.c) || !self.b.is_negative())
    }

    /// Reduction of a positive definite form; returns the reduced form and
    /// the substitution matrix M with (x, y) = M (X, Y).
    pub fn reduce_definite(&self) -> (Form, Mat2i) {
        let mut f = self.clone();
        let mut m = mat_id();
        loop {
            let two_a = &f.a * 2;
            let t = (&f.a - &f.b).div_floor(&two_a);
            if !t.is_zero() {
                f = f.translate(&t);
                m = mat_mul(&m, &[[BigInt::one(), t], [BigInt::zero(), BigInt::one()]]);
            }
            if f.a > f.c || (f.a == f.c && f.b.is_negative()) {
                f = f.rho_with(&BigInt::zero());
                m = mat_mul(
                    &m,
                    &[
                        [BigInt::zero(), -BigInt::one()],
                        [BigInt::one(), BigInt::zero()],
                    ],
                );
                continue;
            }
            debug_assert!(f.is_reduced_definite());
            return (f, m);
        }
    }

    fn is_reduced_indefinite(&self, s: &BigInt) -> bool {
        let a2 = self.a.abs() * 2;
        self.b.is_positive() && &self.b <= s && &a2 + &self.b > *s && &a2 - &self.b <= *s
    }

    /// One reduction step of an indefinite form of non-square discriminant D
    /// with s = ⌊√D⌋.
    fn rho_indefinite(&self, d: &BigInt, s: &BigInt) -> (Form, BigInt) {
        let c_abs = self.c.abs();
        let modulus = &c_abs * 2;
        let lo = if &c_abs * &c_abs > *d {
            -&c_abs + 1
        } else {
            s - &c_abs * 2 + 1
        };
        let diff: BigInt = -&self.b - &lo;
        let r = &lo + diff.mod_floor(&modulus);
        let t = (&r + &self.b) / (&self.c * 2);
        (self.rho_with(&t), t)
    }

    /// The cycle of reduced forms properly equivalent to an indefinite
    /// form, with the substitution matrix reaching each of them.
    pub fn reduced_cycle(&self) -> Vec<(Form, Mat2i)> {
        let d = self.discriminant();
        let s = d.sqrt();
        let mut f = self.clone();
        let mut m = mat_id();
        let step = |f: &Form, m: &Mat2i| {
            let (g, t) = f.rho_indefinite(&d, &s);
            let mm = mat_mul(m, &[[BigInt::zero(), -BigInt::one()], [BigInt::one(), t]]);
            (g, mm)
        };
        let mut guard = 0;
        while !f.is_reduced_indefinite(&s) {
            (f, m) = step(&f, &m);
            guard += 1;
            assert!(guard < 100_000, "form reduction did not terminate");
        }
        let start = f.clone();
        let mut out = vec![(f.clone(), m.clone())];
        loop {
            (f, m) = step(&f, &m);
            if f == start {
                return out;
            }
            out.push((f.clone(), m.clone()));
        }
    }

    /// Evaluates the form.
    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        &self.a * x * x + &self.b * x * y + &self.c * y * y
    }
}

/// Which class group is meant for real quadratic fields.
#[derive(
    Clone,
    Copy,
    Debug,
    Default,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    serde::Serialize,
    serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    /// Ideals modulo principal ideals.
    #[default]
    Wide,
    /// Ideals modulo totally positive principal ideals.
    Narrow,
}

/// Data attaching an integral ideal to its binary form: the form, the
/// primitive basis (A, B + ω), and the rational scale `c/den`.
struct IdealForm {
    form: Form,
    big_a: BigInt,
    big_b: BigInt,
    scale: BigRational,
}

fn ideal_form(i: &FracIdeal) -> IdealForm {
    let q = i
        .field
        .quadratic()
        .expect("forms exist for quadratic fields");
    let (t, n) = q.omega_trace_norm();
    let (a, b, c) = i.abc();
    let (aa, bb) = (&a / &c, &b / &c);
    let form = Form {
        a: aa.clone(),
        b: &bb * 2 + &t,
        c: (&bb * &bb + &bb * &t + &n) / &aa,
    };
    IdealForm {
        form,
        big_a: aa,
        big_b: bb,
        scale: BigRational::new(c, i.den.clone()),
    }
}

/// The ideal Z|a| + Z (−b + √D)/2 attached to a form.
fn form_ideal(field: &BaseField, f: &Form) -> FracIdeal {
    let q = field.quadratic().unwrap();
    let (t, _) = q.omega_trace_norm();
    assert!(f.a.is_positive());
    let bb = (&f.b - &t) / 2;
    let w = q.omega();
    let gen2 = &field.element_int(&[bb, BigInt::zero()]) + &w;
    FracIdeal::from_generators(field, &[field.element_int(&[f.a.abs()]), gen2]).unwrap()
}

/// Canonical class key of an ideal together with a generator when the
/// class is trivial.
fn class_key(i: &FracIdeal, kind: ClassKind) -> (Form, Option<NfElement>) {
    let (k, g, _) = class_key_full(i, kind);
    (k, g)
}

/// As [`class_key`], also returning a reduced form with positive leading
/// coefficient properly equivalent to the form of `i`.
fn class_key_full(i: &FracIdeal, kind: ClassKind) -> (Form, Option<NfElement>, Form) {
    let field = &i.field;
    let data = ideal_form(i);
    let q = field.quadratic().unwrap();
    let gen_from = |x: &BigInt, y: &BigInt| {
        let w = q.omega();
        let base = &field.element_int(&[&data.big_a * x + &data.big_b * y])
            + &(&field.element_int(std::slice::from_ref(y)) * &w);
        &base * &field.rational(data.scale.clone())
    };
    if q.d < 0 {
        let (f, m) = data.form.reduce_definite();
        let gen = f.a.is_one().then(|| gen_from(&m[0][0], &m[1][0]));
        return (f.clone(), gen, f);
    }
    let mut key: Option<Form> = None;
    let mut rep: Option<Form> = None;
    let mut gen = None;
    let mut forms = vec![(data.form.clone(), false)];
    if kind == ClassKind::Wide {
        let f = &data.form;
        forms.push((
            Form {
                a: -&f.a,
                b: f.b.clone(),
                c: -&f.c,
            },
            true,
        ));
    }
    for (f, negated) in forms {
        for (g, m) in f.reduced_cycle() {
            if gen.is_none() && g.a.abs().is_one() {
                let y = if negated { -&m[1][0] } else { m[1][0].clone() };
                gen = Some(gen_from(&m[0][0], &y));
            }
            if !negated && g.a.is_positive() && rep.as_ref().is_none_or(|r| g < *r) {
                rep = Some(g.clone());
            }
            if key.as_ref().is_none_or(|k| g < *k) {
                key = Some(g);
            }
        }
    }
    if kind == ClassKind::Narrow {
        // Narrow triviality needs a totally positive generator.
        gen = gen.and_then(|g| {
            let n = g.norm();
            if n.is_positive() {
                let s = if g.real_sign() == std::cmp::Ordering::Less {
                    -g
                } else {
                    g
                };
                Some(s)
            } else {
                None
            }
        });
    }
    (key.unwrap(), gen, rep.unwrap())
}

/// A generator of `i` if it is principal (for the wide notion), verified by
/// HNF equality.
pub fn is_principal(i: &FracIdeal) -> Option<NfElement> {
    match &i.field {
        BaseField::Rational => {
            let (a, _, _) = i.abc();
            Some(i.field.rational(BigRational::new(a, i.den.clone())))
        }
        BaseField::Quadratic(_) => {
            let (_, gen) = class_key(i, ClassKind::Wide);
            let g = gen?;
            debug_assert_eq!(FracIdeal::principal(&i.field, &g).unwrap(), *i);
            Some(g)
        }
    }
}

/// The ideal class group with explicit representatives.
#[derive(Debug)]
pub struct ClassGroup {
    pub field: BaseField,
    pub kind: ClassKind,
    reps: Vec<FracIdeal>,
    keys: BTreeMap<Form, usize>,
    structure: OnceLock<Vec<(usize, u64)>>,
}

impl ClassGroup {
    fn compute(field: &BaseField, kind: ClassKind, bound: i64) -> Result<Self, IdealError> {
        let q = match field {
            BaseField::Rational => {
                return Ok(ClassGroup {
                    field: field.clone(),
                    kind,
                    reps: vec![FracIdeal::unit(field)],
                    keys: BTreeMap::new(),
                    structure: OnceLock::new(),
                })
            }
            BaseField::Quadratic(q) => q,
        };
        if q.discriminant.abs() > bound {
            return Err(IdealError::BoundExceeded(q.discriminant.abs(), bound));
        }
        // One prime above each rational prime suffices: the conjugate of a
        // split prime lies in the inverse class.
        let mut gens: Vec<FracIdeal> = Vec::new();
        let mb = q.minkowski_bound().to_u64().unwrap();
        for p in 2..=mb {
            if arith::is_prime(p) {
                gens.push(factor_rational_prime(p, field)?.swap_remove(0).ideal);
            }
        }
        let mut g = ClassGroup {
            field: field.clone(),
            kind,
            reps: Vec::new(),
            keys: BTreeMap::new(),
            structure: OnceLock::new(),
        };
        g.insert(FracIdeal::unit(field));
        // Grow the subgroup one generator at a time by whole cosets.
        for p in &gens {
            let (key, _) = class_key(p, kind);
            if g.keys.contains_key(&key) {
                continue;
            }
            let base: Vec<FracIdeal> = g.reps.clone();
            let mut power = p.clone();
            loop {
                let (key, _) = class_key(&power, kind);
                if g.keys.contains_key(&key) {
                    break;
                }
                for r in &base {
                    g.insert(r.mul(&power));
                }
                let next = g.reps[g.keys[&key]].clone();
                power = next.mul(p);
            }
        }
        Ok(g)
    }

    fn insert(&mut self, ideal: FracIdeal) -> usize {
        let (key, _, rf) = class_key_full(&ideal, self.kind);
        let rep = form_ideal(&self.field, &rf);
        debug_assert_eq!(class_key(&rep, self.kind).0, key);
        let idx = self.reps.len();
        self.reps.push(rep);
        self.keys.insert(key, idx);
        idx
    }

    /// The class number.
    pub fn order(&self) -> usize {
        self.reps.len()
    }

    /// Index of the class of `i`; index 0 is the principal class.
    pub fn class_of(&self, i: &FracIdeal) -> usize {
        if self.field == BaseField::Rational {
            return 0;
        }
        self.keys[&class_key(i, self.kind).0]
    }

    /// A small integral representative of a class.
    pub fn rep(&self, idx: usize) -> &FracIdeal {
        &self.reps[idx]
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.class_of(&self.reps[i].mul(&self.reps[j]))
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.class_of(&self.reps[i].inv())
    }

    pub fn pow(&self, i: usize, e: i64) -> usize {
        self.class_of(&self.reps[i].pow(e))
    }

    /// The 2-torsion subgroup as class indices, identity first.
    pub fn two_torsion(&self) -> Vec<usize> {
        (0..self.order()).filter(|&i| self.mul(i, i) == 0).collect()
    }

    /// Classes of squares.
    pub fn squares(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.order()).map(|i| self.mul(i, i)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// A class whose square is `i`, if any.
    pub fn sqrt_class(&self, i: usize) -> Option<usize> {
        (0..self.order()).find(|&j| self.mul(j, j) == i)
    }

    pub fn is_square(&self, i: usize) -> bool {
        self.sqrt_class(i).is_some()
    }

    /// Invariant decomposition: generator class indices with their orders,
    /// each order dividing the next, product equal to the class number.
    pub fn structure(&self) -> &[(usize, u64)] {
        self.structure.get_or_init(|| self.compute_structure())
    }

    fn compute_structure(&self) -> Vec<(usize, u64)> {
        let h = self.order();
        if h == 1 {
            return Vec::new();
        }
        // Exponent vectors over all nontrivial classes reached by BFS with
        // Schreier relations, then a Smith form.
        let gens: Vec<usize> = (1..h).collect();
        let k = gens.len();
        let mut vecs: HashMap<usize, Vec<BigInt>> = HashMap::new();
        vecs.insert(0, vec![BigInt::zero(); k]);
        let mut order = vec![0usize];
        let mut rels: Vec<Vec<BigInt>> = Vec::new();
        let mut qi = 0;
        while qi < order.len() {
            let x = order[qi];
            qi += 1;
            for (gi, &g) in gens.iter().enumerate() {
                let y = self.mul(x, g);
                let mut v = vecs[&x].clone();
                v[gi] += 1;
                match vecs.get(&y) {
                    Some(w) => rels.push(v.iter().zip(w).map(|(a, b)| a - b).collect()),
                    None => {
                        vecs.insert(y, v);
                        order.push(y);
                    }
                }
            }
        }
        let hnf = arith::hnf_rows(&rels, k);
        let (d, v) = arith::smith_diagonal(&hnf);
        let vinv = arith::unimodular_inverse(&v);
        let mut out = Vec::new();
        for (i, di) in d.iter().enumerate() {
            if di.is_one() {
                continue;
            }
            let cls = vinv[i].iter().enumerate().fold(0usize, |acc, (j, e)| {
                let e = e.mod_floor(&BigInt::from(h as i64)).to_i64().unwrap();
                self.mul(acc, self.pow(gens[j], e))
            });
            out.push((cls, di.to_u64().unwrap()));
        }
        out
    }
}

type ClassGroupCache = Mutex<HashMap<(BaseField, ClassKind), Arc<ClassGroup>>>;

fn cache() -> &'static ClassGroupCache {
    static CACHE: OnceLock<ClassGroupCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The wide class group, cached per field, under the default bound.
pub fn class_group(field: &BaseField) -> Result<Arc<ClassGroup>, IdealError> {
    class_group_with(field, ClassKind::Wide, DEFAULT_DISC_BOUND)
}

pub fn class_group_with(
    field: &BaseField,
    kind: ClassKind,
    bound: i64,
) -> Result<Arc<ClassGroup>, IdealError> {
    let key = (field.clone(), kind);
    if let Some(g) = cache().lock().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let g = Arc::new(ClassGroup::compute(field, kind, bound)?);
    cache().lock().unwrap().insert(key, g.clone());
    Ok(g)
}

/// Order of the 2-torsion subgroup of the class group.
pub fn h2(field: &BaseField) -> usize {
    class_group(field).expect("class group").two_torsion().len()
}

/// True iff the class of the ideal-valued distance `d` is a square.
pub fn artin_distance_trivial(d: &FracIdeal, g: &ClassGroup) -> bool {
    g.is_square(g.class_of(d))
}

/// Whether K(√δ)/K is unramified at every place. With `narrow` set the
/// infinite places are ignored.
pub fn relative_quadratic_unramified(
    field: &BaseField,
    delta: &NfElement,
    narrow: bool,
) -> Result<bool, IdealError> {
    let delta = field.lift(delta)?;
    if delta.is_zero() || delta.sqrt().is_some() {
        return Err(IdealError::SquareDelta);
    }
    let n = field.norm(&delta);
    let mut primes: Vec<u64> = vec![2];
    for part in [n.numer(), n.denom()] {
        for (p, _) in arith::factorize_big(part) {
            primes.push(p.to_u64().unwrap());
        }
    }
    primes.sort_unstable();
    primes.dedup();
    for p in primes {
        for pl in factor_rational_prime(p, field)? {
            let v = pl.valuation(&delta)?;
            if v % 2 != 0 {
                return Ok(false);
            }
            if p == 2 {
                let u = &delta * &pl.uniformizer.pow(-v)?;
                let e2 = pl.valuation(&field.int(2))?;
                let cands: Vec<NfElement> = match field {
                    BaseField::Rational => (0..4).map(|x| field.int(x)).collect(),
                    BaseField::Quadratic(_) => (0..16)
                        .map(|i| field.element_int(&[big(i % 4), big(i / 4)]))
                        .collect(),
                };
                let ok = cands.iter().any(|s| {
                    let diff = &u - &(s * s);
                    diff.is_zero() || pl.valuation(&diff).unwrap() >= 2 * e2
                });
                if !ok {
                    return Ok(false);
                }
            }
        }
    }
    if !narrow && !field.is_imaginary() {
        let pos = |x: &NfElement| match field {
            BaseField::Rational => x.as_rational().unwrap().is_positive(),
            BaseField::Quadratic(_) => x.real_sign() == std::cmp::Ordering::Greater,
        };
        if !pos(&delta) || !pos(&field.conj(&delta)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Steinitz data of an ideal of a quadratic field relative to Q: the class
/// is always trivial and the witness is a free Z-basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinitzWitness {
    pub class_trivial: bool,
    pub basis: Vec<NfElement>,
}

pub fn relative_steinitz_class(i: &FracIdeal) -> SteinitzWitness {
    SteinitzWitness {
        class_trivial: true,
        basis: i.z_basis(),
    }
}

/// An integral element congruent to `c_j` modulo each integral ideal `I_j`;
/// the ideals must be pairwise coprime.
pub fn integral_crt(field: &BaseField, conds: &[(FracIdeal, NfElement)]) -> NfElement {
    if conds.is_empty() {
        return field.int(0);
    }
    let modulus = conds
        .iter()
        .fold(FracIdeal::unit(field), |acc, (i, _)| acc.mul(i));
    let ints = |i: &FracIdeal| -> Vec<Vec<BigInt>> {
        i.z_basis()
            .iter()
            .map(|x| {
                rev_coords(field, x)
                    .iter()
                    .map(|r| r.to_integer())
                    .collect()
            })
            .collect()
    };
    let one = vec![BigInt::one(); 1];
    let target: Vec<BigInt> = match field {
        BaseField::Rational => one,
        BaseField::Quadratic(_) => vec![BigInt::zero(), BigInt::one()],
    };
    let mut acc = field.int(0);
    for (j, (ij, cj)) in conds.iter().enumerate() {
        let others = conds
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != j)
            .fold(FracIdeal::unit(field), |a, (_, (il, _))| a.mul(il));
        let ga = ints(&others);
        let mut gens = ga.clone();
        gens.extend(ints(ij));
        let coef = arith::int_express(&gens, &target).expect("ideals are coprime");
        let mut e = vec![BigInt::zero(); target.len()];
        for (k, row) in ga.iter().enumerate() {
            for (x, y) in e.iter_mut().zip(row) {
                *x += &coef[k] * y;
            }
        }
        let ej = from_rev(field, &e);
        acc = &acc + &(cj * &ej);
    }
    modulus.reduce(&acc)
}

/// Target of the approximation problem: value and precision at one place.
#[derive(Clone, Debug)]
pub struct CrtTarget {
    pub place: PrimePlace,
    pub value: NfElement,
    pub precision: i64,
}

/// An element `a` with ν(a − value) > precision at every target place and
/// ν(a) ≥ 0 at every other finite place.
pub fn crt_approximate(field: &BaseField, targets: &[CrtTarget]) -> Result<NfElement, IdealError> {
    for (i, t) in targets.iter().enumerate() {
        if targets[..i].iter().any(|s| s.place == t.place) {
            return Err(IdealError::RepeatedPlace);
        }
    }
    // Local replacements with only p-power denominators.
    let mut local: Vec<(NfElement, i64)> = Vec::new();
    for t in targets {
        let v = field.lift(&t.value)?;
        if v.is_zero() {
            local.push((v, 0));
            continue;
        }
        let pb = big(t.place.p as i64);
        let (num, den) = field.split_denominator(&v);
        let k = arith::val_int(&den, &pb);
        let pk = num_traits::pow(pb.clone(), k as usize);
        let q = &den / &pk;
        let e = t.place.e();
        let r = k + (t.precision.max(0) + 1 + e - 1) / e + 1;
        let md = num_traits::pow(pb, r as usize);
        let qi = arith::modinv(&q, &md).unwrap();
        let num: Vec<BigInt> = num.iter().map(|x| x * &qi).collect();
        let b = &field.element_int(&num) * &field.rational(BigRational::new(BigInt::one(), pk));
        local.push((b, k));
    }
    // Common rational denominator t = Π p^k.
    let mut kmax: BTreeMap<u64, i64> = BTreeMap::new();
    for (t, (_, k)) in targets.iter().zip(&local) {
        let e = kmax.entry(t.place.p).or_insert(0);
        *e = (*e).max(*k);
    }
    let tden = kmax.iter().fold(BigInt::one(), |acc, (p, k)| {
        acc * num_traits::pow(big(*p as i64), *k as usize)
    });
    let tel = field.element_int(std::slice::from_ref(&tden));
    let mut conds: Vec<(FracIdeal, NfElement)> = Vec::new();
    for (t, (b, _)) in targets.iter().zip(&local) {
        let kt = kmax[&t.place.p];
        let n = t.precision.max(-1) + 1 + t.place.e() * kt;
        let c = &tel * b;
        if n > 0 {
            conds.push((t.place.ideal.pow(n), c));
        }
    }
    for (&p, &k) in &kmax {
        if k == 0 {
            continue;
        }
        for pl in factor_rational_prime(p, field)? {
            if !targets.iter().any(|t| t.place == pl) {
                conds.push((pl.ideal.pow(pl.e() * k), field.int(0)));
            }
        }
    }
    let c = integral_crt(field, &conds);
    let a = &c * &field.rational(BigRational::new(BigInt::one(), tden));
    for t in targets {
        let diff = &a - &field.lift(&t.value)?;
        debug_assert!(diff.is_zero() || t.place.valuation(&diff)? > t.precision);
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(d: i64) -> BaseField {
        BaseField::from_d(d).unwrap()
    }

    #[test]
    fn dyadic_place_of_minus5() {
        let f = k(-5);
        let pl = factor_rational_prime(2, &f).unwrap();
        assert_eq!(pl.len(), 1);
        assert_eq!(pl[0].kind, PlaceKind::Ramified);
        let expected = FracIdeal::from_generators(
            &f,
            &[f.int(2), NfElement::parse("1+sqrt(-5)", f.tag()).unwrap()],
        )
        .unwrap();
        assert_eq!(pl[0].ideal, expected);
        assert_eq!(factor_rational_prime(3, &f).unwrap().len(), 2);
        assert_eq!(
            factor_rational_prime(11, &f).unwrap()[0].kind,
            PlaceKind::Inert
        );
    }

    #[test]
    fn valuations_and_norms() {
        let f = k(-5);
        let p2 = &factor_rational_prime(2, &f).unwrap()[0];
        assert_eq!(p2.valuation(&f.int(2)).unwrap(), 2);
        assert_eq!(p2.valuation(&f.int(1)).unwrap(), 0);
        let x = NfElement::parse("1+sqrt(-5)", f.tag()).unwrap();
        assert_eq!(p2.valuation(&x).unwrap(), 1);
        assert_eq!(p2.valuation_by_membership(&x).unwrap(), 1);
        assert_eq!(p2.valuation(&p2.uniformizer).unwrap(), 1);
        assert!(p2.valuation(&f.int(0)).is_err());
        assert_eq!(p2.ideal.norm(), BigRational::from_integer(2.into()));
    }

    #[test]
    fn class_numbers() {
        assert_eq!(class_group(&k(-5)).unwrap().order(), 2);
        assert_eq!(class_group(&k(-1)).unwrap().order(), 1);
        assert_eq!(class_group(&k(-15)).unwrap().order(), 2);
        let g14 = class_group(&k(-14)).unwrap();
        assert_eq!(g14.order(), 4);
        assert_eq!(g14.two_torsion().len(), 2);
        assert_eq!(
            g14.structure().iter().map(|x| x.1).collect::<Vec<_>>(),
            vec![4]
        );
        assert_eq!(class_group(&k(10)).unwrap().order(), 2);
        assert_eq!(class_group(&k(3)).unwrap().order(), 1);
        assert_eq!(
            class_group_with(&k(3), ClassKind::Narrow, 1000)
                .unwrap()
                .order(),
            2
        );
        assert_eq!(class_group(&k(-23)).unwrap().order(), 3);
    }

    #[test]
    fn principality() {
        let f = k(-5);
        let p2 = factor_rational_prime(2, &f).unwrap()[0].ideal.clone();
        assert!(is_principal(&p2).is_none());
        let g = is_principal(&p2.pow(2)).unwrap();
        assert_eq!(g.norm().abs(), BigRational::from_integer(4.into()));
        assert!(is_principal(&FracIdeal::principal(&f, &f.int(7)).unwrap()).is_some());
        let g = class_group(&f).unwrap();
        assert!(!artin_distance_trivial(&p2, &g));
        assert!(artin_distance_trivial(&p2.pow(2), &g));
        // Real field with a nontrivial principal ideal.
        let f10 = k(10);
        let i = FracIdeal::principal(&f10, &NfElement::parse("3+1*sqrt(10)", f10.tag()).unwrap())
            .unwrap();
        let gen = is_principal(&i).unwrap();
        assert_eq!(FracIdeal::principal(&f10, &gen).unwrap(), i);
    }

    #[test]
    fn unramified_extensions() {
        assert!(relative_quadratic_unramified(&k(-5), &k(-5).int(-1), false).unwrap());
        assert!(!relative_quadratic_unramified(
            &BaseField::Rational,
            &BaseField::Rational.int(-1),
            false
        )
        .unwrap());
        assert!(relative_quadratic_unramified(&k(-15), &k(-15).int(-3), false).unwrap());
        assert!(!relative_quadratic_unramified(&k(-5), &k(-5).int(2), false).unwrap());
        assert!(relative_quadratic_unramified(&k(-5), &k(-5).int(1), false).is_err());
    }

    #[test]
    fn steinitz_bases() {
        let f = k(-5);
        let p2 = factor_rational_prime(2, &f).unwrap()[0].ideal.clone();
        let b = relative_steinitz_class(&p2).basis;
        assert_eq!(
            b,
            vec![f.int(2), NfElement::parse("1+sqrt(-5)", f.tag()).unwrap()]
        );
        let b3 = relative_steinitz_class(&p2.scale(&f.int(3))).basis;
        assert_eq!(
            b3,
            vec![f.int(6), NfElement::parse("3+3*sqrt(-5)", f.tag()).unwrap()]
        );
    }

    #[test]
    fn crt_examples() {
        let f = k(-5);
        let p2 = factor_rational_prime(2, &f).unwrap()[0].clone();
        let a = crt_approximate(
            &f,
            &[CrtTarget {
                place: p2.clone(),
                value: f.int(0),
                precision: 3,
            }],
        )
        .unwrap();
        assert!(a.is_zero() || p2.valuation(&a).unwrap() >= 4);
        let p3 = factor_rational_prime(3, &f).unwrap();
        let a = crt_approximate(
            &f,
            &[
                CrtTarget {
                    place: p3[0].clone(),
                    value: f.int(1),
                    precision: 2,
                },
                CrtTarget {
                    place: p3[1].clone(),
                    value: f.int(0),
                    precision: 2,
                },
            ],
        )
        .unwrap();
        assert!(p3[0].valuation(&(&a - &f.int(1))).unwrap() > 2);
        assert!(p3[1].valuation(&a).unwrap() > 2);
        assert!(f.is_integral(&a));
        let q = BaseField::Rational;
        let p5 = factor_rational_prime(5, &q).unwrap()[0].clone();
        let fifth = q.rational(BigRational::new(1.into(), 5.into()));
        let a = crt_approximate(
            &q,
            &[CrtTarget {
                place: p5.clone(),
                value: fifth.clone(),
                precision: 0,
            }],
        )
        .unwrap();
        let d = &a - &fifth;
        assert!(d.is_zero() || p5.valuation(&d).unwrap() > 0);
        assert_eq!(a.as_rational().unwrap().denom(), &BigInt::from(5));
    }

    #[test]
    fn residues_split() {
        let f = k(-5);
        for pl in factor_rational_prime(3, &f).unwrap() {
            let x = &pl.ideal.z_basis()[1] / &f.int(1);
            assert_eq!(pl.residue_index(&x).unwrap(), 0);
            // An element integral at this place but with 3 in its denominator.
            let y = &x / &f.int(3);
            if pl.valuation(&y).unwrap() >= 0 {
                let r = pl.residue(&y).unwrap();
                assert!(pl.valuation(&(&y - &r)).unwrap() >= 1);
            }
        }
    }
}
