//! The Bruhat-Tits tree at a finite place. A vertex v_a^[n] is the ball
//! {x : ν(x − a) ≥ n}, the homothety class of the lattice spanned by (a, 1)
//! and (π^n, 0), and the maximal order of endomorphisms of that lattice.
//! Everything is computed on global elements with exact valuations.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ideals::{IdealError, PlaceKind, PrimePlace};
use crate::matrix::Matrix2;
use crate::numfield::{BaseField, NfElement, NumfieldError};

/// Lowest admissible vertex level.
pub const DEFAULT_LEVEL_FLOOR: i64 = -64;
/// Largest residue field whose neighbors are enumerated.
pub const DEFAULT_RESIDUE_BOUND: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("vertex level {0} is below the floor {1}")]
    LevelBelowFloor(i64, i64),
    #[error("residue field of size {0} exceeds the enumeration bound {1}")]
    ResidueFieldTooLarge(u64, u64),
    #[error("projective points must be pairwise distinct")]
    CoincidentPoints,
    #[error("a generator is not contained in the order of the vertex")]
    NotContained,
    #[error("matrix is singular")]
    Singular,
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Numfield(#[from] NumfieldError),
}

/// A vertex in canonical form: the center is the digit expansion
/// Σ r_i π^i (ν(a) ≤ i < n) over the fixed residue representatives.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    pub center: NfElement,
    pub level: i64,
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v_{{{}}}^{{[{}]}}", self.center, self.level)
    }
}

/// A point of the projective line over the completion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjPoint {
    Finite(NfElement),
    Infinity,
}

/// Arithmetic in the residue field F_q, with F_{p²} = F_p[ω̄].
#[derive(Clone, Copy, Debug)]
struct ResidueField {
    p: u64,
    inert: bool,
    t: u64,
    n: u64,
}

type Fq = (u64, u64);

impl ResidueField {
    fn add(&self, x: Fq, y: Fq) -> Fq {
        ((x.0 + y.0) % self.p, (x.1 + y.1) % self.p)
    }

    fn neg(&self, x: Fq) -> Fq {
        ((self.p - x.0) % self.p, (self.p - x.1) % self.p)
    }

    fn mul(&self, x: Fq, y: Fq) -> Fq {
        let p = self.p;
        if !self.inert {
            return ((x.0 * y.0) % p, 0);
        }
        // (x0 + x1 w)(y0 + y1 w) with w² = t w − n.
        let c0 = x.0 * y.0 % p;
        let c1 = (x.0 * y.1 + x.1 * y.0) % p;
        let c2 = x.1 * y.1 % p;
        ((c0 + p * p - c2 * self.n % p) % p, (c1 + c2 * self.t) % p)
    }

    fn elements(&self) -> Vec<Fq> {
        let p = self.p;
        if self.inert {
            (0..p * p).map(|i| (i % p, i / p)).collect()
        } else {
            (0..p).map(|i| (i, 0)).collect()
        }
    }
}

/// The tree at one place, with its residue table and bounds.
#[derive(Clone, Debug)]
pub struct LocalTree {
    pub place: PrimePlace,
    pub field: BaseField,
    residues: Vec<NfElement>,
    pub level_floor: i64,
    pub residue_bound: u64,
}

impl LocalTree {
    pub fn new(place: &PrimePlace) -> Self {
        LocalTree {
            field: place.field.clone(),
            residues: place.residues(),
            place: place.clone(),
            level_floor: DEFAULT_LEVEL_FLOOR,
            residue_bound: DEFAULT_RESIDUE_BOUND,
        }
    }

    pub fn residues(&self) -> &[NfElement] {
        &self.residues
    }

    pub fn val(&self, x: &NfElement) -> Option<i64> {
        self.place.val_or_inf(x)
    }

    /// π^k for the fixed uniformizer.
    pub fn pi_pow(&self, k: i64) -> NfElement {
        self.field
            .lift(&self.place.uniformizer)
            .unwrap()
            .pow(k)
            .unwrap()
    }

    /// The canonical vertex v_a^[n].
    pub fn vertex(&self, a: &NfElement, n: i64) -> Result<TreeVertex, TreeError> {
        if n < self.level_floor {
            return Err(TreeError::LevelBelowFloor(n, self.level_floor));
        }
        let a = self.field.lift(a)?;
        let zero = self.field.int(0);
        let m = match self.val(&a) {
            None => {
                return Ok(TreeVertex {
                    center: zero,
                    level: n,
                })
            }
            Some(m) if m >= n => {
                return Ok(TreeVertex {
                    center: zero,
                    level: n,
                })
            }
            Some(m) => m,
        };
        if m < self.level_floor {
            return Err(TreeError::LevelBelowFloor(m, self.level_floor));
        }
        let pi = self.field.lift(&self.place.uniformizer)?;
        let mut y = &a * &self.pi_pow(-m);
        let mut acc = zero;
        let mut pk = self.pi_pow(m);
        for _ in m..n {
            let r = &self.residues[self.place.residue_index(&y)?];
            acc = &acc + &(r * &pk);
            y = &(&y - r) / &pi;
            pk = &pk * &pi;
        }
        Ok(TreeVertex {
            center: acc,
            level: n,
        })
    }

    /// The vertex v_0^[0] of the standard lattice.
    pub fn root(&self) -> TreeVertex {
        TreeVertex {
            center: self.field.int(0),
            level: 0,
        }
    }

    pub fn vertex_eq(&self, v: &TreeVertex, w: &TreeVertex) -> bool {
        v == w
    }

    /// The over-ball followed by one sub-ball per residue representative.
    pub fn neighbors(&self, v: &TreeVertex) -> Result<Vec<TreeVertex>, TreeError> {
        if self.place.residue_size > self.residue_bound {
            return Err(TreeError::ResidueFieldTooLarge(
                self.place.residue_size,
                self.residue_bound,
            ));
        }
        let mut out = vec![self.vertex(&v.center, v.level - 1)?];
        let pk = self.pi_pow(v.level);
        for r in &self.residues {
            out.push(self.vertex(&(&v.center + &(r * &pk)), v.level + 1)?);
        }
        Ok(out)
    }

    /// Closed-form distance.
    pub fn distance(&self, v: &TreeVertex, w: &TreeVertex) -> i64 {
        let mut m = v.level.min(w.level);
        if let Some(d) = self.val(&(&v.center - &w.center)) {
            m = m.min(d);
        }
        (v.level - m) + (w.level - m)
    }

    /// All vertices at distance at most `r` from `v`, sorted.
    pub fn ball(&self, v: &TreeVertex, r: i64) -> Result<Vec<TreeVertex>, TreeError> {
        let mut seen: BTreeSet<TreeVertex> = BTreeSet::from([v.clone()]);
        let mut queue = VecDeque::from([(v.clone(), 0)]);
        while let Some((x, d)) = queue.pop_front() {
            if d == r {
                continue;
            }
            for y in self.neighbors(&x)? {
                if seen.insert(y.clone()) {
                    queue.push_back((y, d + 1));
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// The unique vertex on all three paths joining three distinct points.
    pub fn incenter(
        &self,
        z1: &ProjPoint,
        z2: &ProjPoint,
        z3: &ProjPoint,
    ) -> Result<TreeVertex, TreeError> {
        if z1 == z2 || z1 == z3 || z2 == z3 {
            return Err(TreeError::CoincidentPoints);
        }
        let finite: Vec<&NfElement> = [z1, z2, z3]
            .iter()
            .filter_map(|z| match z {
                ProjPoint::Finite(x) => Some(x),
                ProjPoint::Infinity => None,
            })
            .collect();
        if finite.len() == 2 {
            let n = self.val(&(finite[0] - finite[1])).unwrap();
            return self.vertex(finite[0], n);
        }
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let (i, j) = pairs
            .iter()
            .copied()
            .max_by_key(|&(i, j)| self.val(&(finite[i] - finite[j])).unwrap())
            .unwrap();
        let n = self.val(&(finite[i] - finite[j])).unwrap();
        self.vertex(finite[i], n)
    }

    /// The point (az + b)/(cz + d).
    pub fn moebius_point(g: &Matrix2, z: &ProjPoint) -> ProjPoint {
        match z {
            ProjPoint::Infinity => {
                if g.c.is_zero() {
                    ProjPoint::Infinity
                } else {
                    ProjPoint::Finite(&g.a / &g.c)
                }
            }
            ProjPoint::Finite(x) => {
                let den = &(&g.c * x) + &g.d;
                if den.is_zero() {
                    ProjPoint::Infinity
                } else {
                    ProjPoint::Finite(&(&(&g.a * x) + &g.b) / &den)
                }
            }
        }
    }

    /// The action of g on a vertex through the incenter of the image of the
    /// triplet (a, a + π^n, ∞).
    pub fn moebius_apply(&self, g: &Matrix2, v: &TreeVertex) -> Result<TreeVertex, TreeError> {
        let g = g.lift(&self.field)?;
        if g.det().is_zero() {
            return Err(TreeError::Singular);
        }
        let a = v.center.clone();
        let b = &a + &self.pi_pow(v.level);
        let imgs: Vec<ProjPoint> = [
            ProjPoint::Finite(a),
            ProjPoint::Finite(b),
            ProjPoint::Infinity,
        ]
        .iter()
        .map(|z| Self::moebius_point(&g, z))
        .collect();
        self.incenter(&imgs[0], &imgs[1], &imgs[2])
    }

    /// T = [[a, π^n], [1, 0]], whose columns span the lattice of `v`.
    pub fn lattice_matrix(&self, v: &TreeVertex) -> Matrix2 {
        Matrix2::new(
            v.center.clone(),
            self.pi_pow(v.level),
            self.field.int(1),
            self.field.int(0),
        )
    }

    /// T⁻¹ m T for the lattice matrix T of `v`.
    pub fn local_conjugate(&self, v: &TreeVertex, m: &Matrix2) -> Result<Matrix2, TreeError> {
        let m = m.lift(&self.field)?;
        let a = &v.center;
        let pn = self.pi_pow(v.level);
        let pinv = self.pi_pow(-v.level);
        let ra = &m.c * a;
        let e11 = &ra + &m.d;
        let e12 = &m.c * &pn;
        let inner = &(&(&(&m.a * a) + &m.b) - &(&ra * a)) - &(&m.d * a);
        let e21 = &inner * &pinv;
        let e22 = &m.a - &ra;
        Ok(Matrix2::new(e11, e12, e21, e22))
    }

    fn is_locally_integral(&self, x: &NfElement) -> bool {
        self.val(x).is_none_or(|v| v >= 0)
    }

    /// True iff m lies in the maximal order of `v`.
    pub fn order_contains(&self, v: &TreeVertex, m: &Matrix2) -> Result<bool, TreeError> {
        let c = self.local_conjugate(v, m)?;
        Ok(c.entries().iter().all(|x| self.is_locally_integral(x)))
    }

    fn residue_field(&self) -> ResidueField {
        let (t, n) = match self.field.quadratic() {
            Some(q) => {
                let (t, n) = q.omega_trace_norm();
                let p = num_bigint::BigInt::from(self.place.p);
                use num_integer::Integer;
                use num_traits::ToPrimitive;
                (
                    t.mod_floor(&p).to_u64().unwrap(),
                    n.mod_floor(&p).to_u64().unwrap(),
                )
            }
            None => (0, 0),
        };
        ResidueField {
            p: self.place.p,
            inert: self.place.kind == PlaceKind::Inert,
            t,
            n,
        }
    }

    fn reduce(&self, x: &NfElement) -> Result<Fq, TreeError> {
        let i = self.place.residue_index(x)? as u64;
        let p = self.place.p;
        Ok(if self.place.kind == PlaceKind::Inert {
            (i % p, i / p)
        } else {
            (i, 0)
        })
    }

    /// The neighbors of `v` whose orders contain every generator, read off
    /// from the invariant lines of the reduced generators.
    pub fn residual_invariant_lines(
        &self,
        v: &TreeVertex,
        gens: &[Matrix2],
    ) -> Result<Vec<TreeVertex>, TreeError> {
        let rf = self.residue_field();
        let mut reduced = Vec::new();
        for g in gens {
            let c = self.local_conjugate(v, g)?;
            if !c.entries().iter().all(|x| self.is_locally_integral(x)) {
                return Err(TreeError::NotContained);
            }
            reduced.push([
                self.reduce(&c.a)?,
                self.reduce(&c.b)?,
                self.reduce(&c.c)?,
                self.reduce(&c.d)?,
            ]);
        }
        let invariant = |x: Fq, y: Fq| {
            reduced.iter().all(|m| {
                let mx = rf.add(rf.mul(m[0], x), rf.mul(m[1], y));
                let my = rf.add(rf.mul(m[2], x), rf.mul(m[3], y));
                let cross = rf.add(rf.mul(x, my), rf.neg(rf.mul(y, mx)));
                cross == (0, 0)
            })
        };
        let mut out = Vec::new();
        if invariant((0, 0), (1, 0)) {
            out.push(self.vertex(&v.center, v.level - 1)?);
        }
        let pk = self.pi_pow(v.level);
        for (idx, t) in rf.elements().into_iter().enumerate() {
            if invariant((1, 0), t) {
                out.push(self.vertex(&(&v.center + &(&self.residues[idx] * &pk)), v.level + 1)?);
            }
        }
        Ok(out)
    }

    /// The vertex of the lattice spanned by the columns of `b`.
    pub fn vertex_of_lattice(&self, b: &Matrix2) -> Result<TreeVertex, TreeError> {
        let b = b.lift(&self.field)?;
        let det = b.det();
        if det.is_zero() {
            return Err(TreeError::Singular);
        }
        let (mut c1, mut c2) = (b.column(0), b.column(1));
        let swap = match (self.val(&c1.1), self.val(&c2.1)) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(x), Some(y)) => y < x,
        };
        if swap {
            std::mem::swap(&mut c1, &mut c2);
        }
        let a = &c1.0 / &c1.1;
        let n = self.val(&det).unwrap() - 2 * self.val(&c1.1).unwrap();
        self.vertex(&a, n)
    }

    /// Distance from `v` to the maximal path joining two distinct points.
    pub fn distance_to_path(
        &self,
        v: &TreeVertex,
        z1: &ProjPoint,
        z2: &ProjPoint,
    ) -> Result<i64, TreeError> {
        let one = self.field.int(1);
        let zero = self.field.int(0);
        let g = match (z1, z2) {
            (ProjPoint::Finite(x), ProjPoint::Finite(y)) => Matrix2::new(one.clone(), -x, one, -y),
            (ProjPoint::Finite(x), ProjPoint::Infinity) => Matrix2::new(one.clone(), -x, zero, one),
            (ProjPoint::Infinity, ProjPoint::Finite(y)) => Matrix2::new(zero, one.clone(), one, -y),
            _ => return Err(TreeError::CoincidentPoints),
        };
        let w = self.moebius_apply(&g, v)?;
        Ok(match self.val(&w.center) {
            None => 0,
            Some(m) => (w.level - m).max(0),
        })
    }

    /// Generators of the maximal order of `v` over the local ring.
    pub fn order_generators(&self, v: &TreeVertex) -> Vec<Matrix2> {
        let t = self.lattice_matrix(v);
        let ti = t.inv().unwrap();
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
            .iter()
            .map(|e| {
                let m = Matrix2::from_ints(&self.field, [[e[0], e[1]], [e[2], e[3]]]);
                t.mul(&m).mul(&ti)
            })
            .collect()
    }

    /// g·v through the conjugated order: the unique w whose order equals
    /// g 𝔇_v g⁻¹, searched among the vertices near the incenter answer.
    pub fn moebius_apply_by_orders(
        &self,
        g: &Matrix2,
        v: &TreeVertex,
    ) -> Result<TreeVertex, TreeError> {
        let g = g.lift(&self.field)?;
        let gi = g.inv()?;
        let conj: Vec<Matrix2> = self
            .order_generators(v)
            .iter()
            .map(|x| g.mul(x).mul(&gi))
            .collect();
        // Each maximal order is determined by its lattice; locate it by
        // walking from the root toward vertices containing all generators.
        let mut cur = self.root();
        let mut guard = 0;
        loop {
            if conj
                .iter()
                .all(|x| self.order_contains(&cur, x).unwrap_or(false))
            {
                return Ok(cur);
            }
            let here = self.score(&cur, &conj);
            let mut best: Option<(i64, TreeVertex)> = None;
            for w in self.neighbors(&cur)? {
                let s = self.score(&w, &conj);
                if s < here && best.as_ref().is_none_or(|b| s < b.0) {
                    best = Some((s, w));
                }
            }
            cur = best.ok_or(TreeError::NotContained)?.1;
            guard += 1;
            if guard > 4 * (-self.level_floor) {
                return Err(TreeError::NotContained);
            }
        }
    }

    /// Sum over matrices of the negative part of the minimal valuation of
    /// the locally conjugated entries; zero exactly when all are contained.
    fn score(&self, v: &TreeVertex, ms: &[Matrix2]) -> i64 {
        ms.iter()
            .map(|m| {
                let c = self.local_conjugate(v, m).unwrap();
                c.entries()
                    .iter()
                    .filter_map(|x| self.val(x))
                    .map(|x| (-x).max(0))
                    .max()
                    .unwrap_or(0)
            })
            .sum()
    }
}
