//! Explicit integral representatives: strong approximation in SL₂, free
//! bases of lattices I × J, conjugators carrying v₀ to a tree vertex,
//! normalizer coset representatives, and the synthesis and labelling of one
//! integral representation per conjugacy class.
//!
//! A label is a tuple of tree vertices at the exceptional places together
//! with an ideal class. Labels are computed from an intertwiner with the
//! input representation, so any integral conjugate can be labelled and two
//! representations with different labels are not conjugate over O_K.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith;
use crate::branch::{residue_ring_reps, BranchError};
use crate::counting::{
    first_failing_relator, Classification, CountError, CountReport, RepSpec, Word,
};
use crate::ideals::{
    class_group, crt_approximate, is_principal, ClassGroup, CrtTarget, FracIdeal, IdealError,
    PrimePlace,
};
use crate::localtree::{LocalTree, TreeError, TreeVertex};
use crate::matrix::Matrix2;
use crate::numfield::{BaseField, NfElement, NumfieldError};

/// Number of precision increases tried by [`sl2_approximate`].
const APPROX_RETRIES: i64 = 32;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("approximation target at {0} does not have determinant 1")]
    NotUnimodular(String),
    #[error("the count is symbolic; representatives need a concrete count")]
    Symbolic,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("the lattice is not free: {0}")]
    NotFree(String),
    #[error("no invertible intertwiner between the representations")]
    NotConjugate,
    #[error("internal check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Numfield(#[from] NumfieldError),
}

/// A local target for [`sl2_approximate`].
#[derive(Clone, Debug)]
pub struct ApproxTarget {
    pub place: PrimePlace,
    pub target: Matrix2,
    pub precision: i64,
}

fn upper(field: &BaseField, x: &NfElement) -> Matrix2 {
    Matrix2::new(field.int(1), x.clone(), field.int(0), field.int(1))
}

fn lower(field: &BaseField, x: &NfElement) -> Matrix2 {
    Matrix2::new(field.int(1), field.int(0), x.clone(), field.int(1))
}

fn val(place: &PrimePlace, x: &NfElement) -> i64 {
    place.val_or_inf(x).unwrap_or(i64::MAX)
}

/// A global matrix T of determinant 1 with ν(T − T_i) > M_i entrywise at
/// every target place and integral entries elsewhere. Each target is
/// written as U(−k)·L(y)·U(b)·L(x) with unipotent factors, the parameters
/// are approximated simultaneously, and the precision is raised until the
/// product meets the contract.
pub fn sl2_approximate(field: &BaseField, targets: &[ApproxTarget]) -> Result<Matrix2, SynthError> {
    if targets.is_empty() {
        return Ok(Matrix2::identity(field));
    }
    let mats: Vec<Matrix2> = targets
        .iter()
        .map(|t| t.target.lift(field))
        .collect::<Result<_, _>>()?;
    for (t, m) in targets.iter().zip(&mats) {
        if !m.det().is_one() {
            return Err(SynthError::NotUnimodular(t.place.name()));
        }
    }
    // U(k)·T has nonzero upper-right entry b + k d at every place.
    let k = (0i64..)
        .map(|i| if i % 2 == 0 { i / 2 } else { -(i + 1) / 2 })
        .find(|&k| {
            mats.iter()
                .all(|m| !(&m.b + &(&m.d * &field.int(k))).is_zero())
        })
        .unwrap();
    let mut params = Vec::new();
    for m in &mats {
        let shifted = upper(field, &field.int(k)).mul(m);
        let b = shifted.b.clone();
        let x = &(&shifted.a - &field.int(1)) / &b;
        let y = &(&shifted.d - &field.int(1)) / &b;
        params.push([y, b, x]);
    }
    for margin in (0..APPROX_RETRIES).map(|i| 2 * i) {
        let mut approx: Vec<NfElement> = Vec::new();
        for slot in 0..3 {
            // A parameter that is already global and integral is kept exactly.
            let first = &params[0][slot];
            if field.is_integral(first) && params.iter().all(|p| p[slot] == *first) {
                approx.push(first.clone());
                continue;
            }
            let crt: Vec<CrtTarget> = targets
                .iter()
                .zip(&params)
                .zip(&mats)
                .map(|((t, p), m)| {
                    let low = p
                        .iter()
                        .chain(m.entries())
                        .map(|x| val(&t.place, x))
                        .min()
                        .unwrap_or(0)
                        .min(0);
                    CrtTarget {
                        place: t.place.clone(),
                        value: p[slot].clone(),
                        precision: t.precision - 2 * low + margin,
                    }
                })
                .collect();
            approx.push(crt_approximate(field, &crt)?);
        }
        let t = upper(field, &field.int(-k))
            .mul(&lower(field, &approx[0]))
            .mul(&upper(field, &approx[1]))
            .mul(&lower(field, &approx[2]));
        let ok = targets.iter().zip(&mats).all(|(tg, m)| {
            let diff = t.sub(m);
            diff.entries()
                .iter()
                .all(|x| val(&tg.place, x) > tg.precision)
        });
        if ok {
            debug_assert!(t.det().is_one());
            return Ok(t);
        }
    }
    Err(SynthError::Inconsistent(
        "strong approximation did not converge".into(),
    ))
}

/// Z-module generators β·v (β in the ring basis) of the O_K-span of vectors.
fn span_rows(field: &BaseField, gens: &[(NfElement, NfElement)]) -> Vec<Vec<BigRational>> {
    let mut rows = Vec::new();
    for (x, y) in gens {
        for beta in field.basis() {
            let mut r = field.coords(&(&beta * x));
            r.extend(field.coords(&(&beta * y)));
            rows.push(r);
        }
    }
    rows
}

/// Whether two families of vectors span the same O_K-submodule of K².
pub fn same_module(
    field: &BaseField,
    a: &[(NfElement, NfElement)],
    b: &[(NfElement, NfElement)],
) -> bool {
    let (ra, rb) = (span_rows(field, a), span_rows(field, b));
    let den = ra
        .iter()
        .chain(&rb)
        .flatten()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let cols = 2 * field.degree();
    let hnf = |rows: &[Vec<BigRational>]| {
        let ints: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| (x * BigRational::from_integer(den.clone())).to_integer())
                    .collect()
            })
            .collect();
        arith::hnf_rows(&ints, cols)
    };
    hnf(&ra) == hnf(&rb)
}

fn columns(m: &Matrix2) -> Vec<(NfElement, NfElement)> {
    vec![m.column(0), m.column(1)]
}

/// Generators of I × J as vectors.
fn product_generators(i: &FracIdeal, j: &FracIdeal) -> Vec<(NfElement, NfElement)> {
    let f = i.field();
    let mut out: Vec<(NfElement, NfElement)> =
        i.z_basis().into_iter().map(|x| (x, f.int(0))).collect();
    out.extend(j.z_basis().into_iter().map(|y| (f.int(0), y)));
    out
}

/// A matrix whose columns are an O_K-basis of I × J, when I·J is principal.
pub fn free_basis_of_ideal_pair(
    i: &FracIdeal,
    j: &FracIdeal,
) -> Result<Option<Matrix2>, SynthError> {
    let field = i.field().clone();
    let Some(gamma) = is_principal(&i.mul(j)) else {
        return Ok(None);
    };
    let basis = match &field {
        BaseField::Rational => {
            let q = i.z_basis().remove(0);
            Matrix2::diag(&q, &(&gamma / &q))
        }
        BaseField::Quadratic(_) => {
            // α₁β₁ + α₂β₂ = 1 with αₖ ∈ I and βₖ ∈ I⁻¹.
            let alpha = i.z_basis();
            let inv = i.inv().z_basis();
            let mut gens = Vec::new();
            for a in &alpha {
                for b in &inv {
                    gens.push(
                        field
                            .coords(&(a * b))
                            .iter()
                            .map(|c| c.to_integer())
                            .collect::<Vec<_>>(),
                    );
                }
            }
            let target: Vec<BigInt> = field
                .coords(&field.int(1))
                .iter()
                .map(|c| c.to_integer())
                .collect();
            let coef = arith::int_express(&gens, &target)
                .ok_or_else(|| SynthError::Inconsistent("1 is not in I·I⁻¹".into()))?;
            let n = inv.len();
            let beta: Vec<NfElement> = (0..alpha.len())
                .map(|k| {
                    (0..n).fold(field.int(0), |acc, l| {
                        &acc + &(&field
                            .rational(BigRational::from_integer(coef[k * n + l].clone()))
                            * &inv[l])
                    })
                })
                .collect();
            Matrix2::new(
                alpha[0].clone(),
                alpha[1].clone(),
                -&(&gamma * &beta[1]),
                &gamma * &beta[0],
            )
        }
    };
    if !same_module(&field, &columns(&basis), &product_generators(i, j)) {
        return Err(SynthError::Inconsistent(
            "free basis does not span I × J".into(),
        ));
    }
    Ok(Some(basis))
}

/// T = [[a, η], [1, 0]] with a ≡ center modulo P^n and ν_P(η) = n, so that
/// T·v₀ = v locally at the place of the tree. Both entries are integral at
/// every other finite place.
pub fn conjugator_to_vertex(tree: &LocalTree, v: &TreeVertex) -> Result<Matrix2, SynthError> {
    let field = &tree.field;
    let place = &tree.place;
    let eta = crt_approximate(
        field,
        &[CrtTarget {
            place: place.clone(),
            value: tree.pi_pow(v.level),
            precision: v.level,
        }],
    )?;
    let a = if v.center.is_zero() {
        field.int(0)
    } else {
        crt_approximate(
            field,
            &[CrtTarget {
                place: place.clone(),
                value: v.center.clone(),
                precision: v.level - 1,
            }],
        )?
    };
    let t = Matrix2::new(a, eta, field.int(1), field.int(0));
    if tree.vertex_of_lattice(&t)? != *v {
        return Err(SynthError::Inconsistent(format!(
            "conjugator does not reach {v}"
        )));
    }
    Ok(t)
}

/// Whether u normalizes M₂(O_K): u E u⁻¹ is integral for the matrix units E.
pub fn normalizes_standard_order(field: &BaseField, u: &Matrix2) -> Result<bool, SynthError> {
    let ui = u.inv()?;
    for e in [
        [[1, 0], [0, 0]],
        [[0, 1], [0, 0]],
        [[0, 0], [1, 0]],
        [[0, 0], [0, 1]],
    ] {
        if !u
            .mul(&Matrix2::from_ints(field, e))
            .mul(&ui)
            .is_integral(field)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For each nontrivial class [J] of G_K(2), a matrix u whose columns are a
/// basis of J × J; u normalizes M₂(O_K) and lies outside K^*·GL₂(O_K).
pub fn normalizer_coset_reps(field: &BaseField) -> Result<Vec<(usize, Matrix2)>, SynthError> {
    let g = class_group(field)?;
    let mut out = Vec::new();
    for k in g.two_torsion().into_iter().filter(|&k| k != 0) {
        let j = g.rep(k);
        let u = free_basis_of_ideal_pair(j, j)?.ok_or_else(|| {
            SynthError::Inconsistent(format!("J × J is not free for 2-torsion class {k}"))
        })?;
        if !normalizes_standard_order(field, &u)? {
            return Err(SynthError::Inconsistent(
                "coset representative does not normalize M₂(O_K)".into(),
            ));
        }
        out.push((k, u));
    }
    Ok(out)
}

/// True iff every entry is integral and every relator evaluates to the identity.
pub fn verify_integral_rep(field: &BaseField, matrices: &[Matrix2], relators: &[Word]) -> bool {
    let lifted: Result<Vec<Matrix2>, _> = matrices.iter().map(|m| m.lift(field)).collect();
    let Ok(ms) = lifted else { return false };
    if ms.is_empty()
        || ms
            .iter()
            .any(|m| !m.is_integral(field) || m.det().is_zero())
    {
        return false;
    }
    first_failing_relator(&ms, relators).is_none()
}

/// A Q-basis of {T : src_i T = T dst_i for all i}.
pub fn intertwiners(
    field: &BaseField,
    src: &[Matrix2],
    dst: &[Matrix2],
) -> Result<Vec<Matrix2>, SynthError> {
    let deg = field.degree();
    let basis = field.basis();
    let zero = field.int(0);
    let unknown = |e: usize, k: usize| {
        let mut v = [zero.clone(), zero.clone(), zero.clone(), zero.clone()];
        v[e] = basis[k].clone();
        Matrix2::new(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone())
    };
    let cols = 4 * deg;
    let mut images: Vec<Vec<BigRational>> = Vec::new();
    for e in 0..4 {
        for k in 0..deg {
            let t = unknown(e, k);
            let mut img = Vec::new();
            for (s, d) in src.iter().zip(dst) {
                let m = s.lift(field)?.mul(&t).sub(&t.mul(&d.lift(field)?));
                for x in m.entries() {
                    img.extend(field.coords(x));
                }
            }
            images.push(img);
        }
    }
    let rows: Vec<Vec<BigRational>> = (0..images[0].len())
        .map(|r| images.iter().map(|c| c[r].clone()).collect())
        .collect();
    Ok(arith::rat_nullspace(&rows, cols)
        .into_iter()
        .map(|x| {
            let mut m = Matrix2::new(zero.clone(), zero.clone(), zero.clone(), zero.clone());
            for e in 0..4 {
                for k in 0..deg {
                    m = m.add(&unknown(e, k).scale(&field.rational(x[e * deg + k].clone())));
                }
            }
            m
        })
        .collect())
}

/// An invertible T with φ = T⁻¹ψT, searched among small integer
/// combinations of the intertwiner basis.
pub fn invertible_intertwiner(
    field: &BaseField,
    psi: &[Matrix2],
    phi: &[Matrix2],
) -> Result<Matrix2, SynthError> {
    let basis = intertwiners(field, psi, phi)?;
    if basis.is_empty() {
        return Err(SynthError::NotConjugate);
    }
    for m in &basis {
        if !m.det().is_zero() {
            return Ok(m.clone());
        }
    }
    for c in 1..=8i64 {
        let mut acc = basis[0].clone();
        for (i, m) in basis.iter().enumerate().skip(1) {
            acc = acc.add(&m.scale(&field.int(c.pow(i as u32))));
        }
        if !acc.det().is_zero() {
            return Ok(acc);
        }
    }
    Err(SynthError::NotConjugate)
}

/// Label of a conjugacy class: vertices at the exceptional places and an
/// ideal class index (a coset of squares for irreducible representations,
/// the class of the second coordinate ideal for decomposable ones).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RepLabel {
    pub vertices: Vec<TreeVertex>,
    pub coset: usize,
}

impl RepLabel {
    pub fn to_json(&self) -> Value {
        json!({
            "vertex": self.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "coset": self.coset,
        })
    }
}

/// One synthesized integral representation.
#[derive(Clone, Debug)]
pub struct Representative {
    pub label: RepLabel,
    /// T with generators = T⁻¹ ψ T for the input ψ.
    pub conjugator: Matrix2,
    pub generators: Vec<Matrix2>,
}

impl Representative {
    pub fn to_json(&self) -> Value {
        json!({
            "label": self.label.to_json(),
            "generators": self.generators.iter().map(|g| g.to_strings()).collect::<Vec<_>>(),
            "conjugator": self.conjugator.to_strings(),
        })
    }
}

/// Everything needed to label representations conjugate to a fixed one.
pub struct Labeller {
    field: BaseField,
    gens: Vec<Matrix2>,
    classification: Classification,
    places: Vec<PrimePlace>,
    trees: Vec<LocalTree>,
    group: Arc<ClassGroup>,
    /// Eigenbasis of the decomposable case.
    eigen: Option<Matrix2>,
}

fn eigenbasis(rep: &RepSpec) -> Result<Matrix2, SynthError> {
    let f = &rep.field;
    let Some(key) = rep.gens.iter().find(|g| !g.is_scalar()) else {
        return Ok(Matrix2::identity(f));
    };
    let t = key.trace();
    let disc = &(&t * &t) - &(&key.det() * &f.int(4));
    let s = disc
        .sqrt()
        .ok_or_else(|| SynthError::Unsupported("eigenvalues outside K".into()))?;
    let half = f.rational(BigRational::new(1.into(), 2.into()));
    let col = |lam: &NfElement| {
        let (x, y) = (key.b.clone(), lam - &key.a);
        if !x.is_zero() || !y.is_zero() {
            (x, y)
        } else {
            (lam - &key.d, key.c.clone())
        }
    };
    let c1 = col(&(&(&t + &s) * &half));
    let c2 = col(&(&(&t - &s) * &half));
    Ok(Matrix2::from_columns((&c1.0, &c1.1), (&c2.0, &c2.1)))
}

fn ideal_of(field: &BaseField, xs: &[&NfElement]) -> Result<FracIdeal, SynthError> {
    let nz: Vec<NfElement> = xs
        .iter()
        .filter(|x| !x.is_zero())
        .map(|x| (*x).clone())
        .collect();
    Ok(FracIdeal::from_generators(field, &nz)?)
}

impl Labeller {
    pub fn new(rep: &RepSpec, report: &CountReport) -> Result<Self, SynthError> {
        let field = rep.field.clone();
        let group = class_group(&field)?;
        let (places, eigen) = match report.classification {
            Classification::Decomposable => {
                let p = eigenbasis(rep)?;
                let mut cond = Vec::new();
                for g in &rep.gens {
                    let d = g.conj_by(&p)?;
                    cond.push(&d.a - &d.d);
                }
                let refs: Vec<&NfElement> = cond.iter().collect();
                let places = if refs.iter().all(|x| x.is_zero()) {
                    vec![]
                } else {
                    ideal_of(&field, &refs)?
                        .factor()
                        .into_iter()
                        .map(|(p, _)| p)
                        .collect()
                };
                (places, Some(p))
            }
            _ => (report.places.clone(), None),
        };
        let trees = places.iter().map(LocalTree::new).collect();
        Ok(Labeller {
            field,
            gens: rep.gens.clone(),
            classification: report.classification,
            places,
            trees,
            group,
            eigen,
        })
    }

    pub fn places(&self) -> &[PrimePlace] {
        &self.places
    }

    fn tuple(&self, m: &Matrix2) -> Result<Vec<TreeVertex>, SynthError> {
        self.trees
            .iter()
            .map(|t| t.vertex_of_lattice(m).map_err(SynthError::from))
            .collect()
    }

    /// Label of the representation T⁻¹ψT.
    pub fn label_of_conjugator(&self, t: &Matrix2) -> Result<RepLabel, SynthError> {
        match self.classification {
            Classification::Decomposable => self.decomposable_label(t),
            Classification::AbsolutelyIrreducible => self.irreducible_label(t),
            Classification::IndecomposableAbelian => Ok(RepLabel {
                vertices: vec![],
                coset: 0,
            }),
        }
    }

    /// Label of an integral representation φ conjugate to the input over K.
    pub fn label_of(&self, phi: &[Matrix2]) -> Result<RepLabel, SynthError> {
        let t = invertible_intertwiner(&self.field, &self.gens, phi)?;
        self.label_of_conjugator(&t)
    }

    /// In the eigenbasis, Λ = T O² has I₁ = Λ ∩ K e₁ and J₂ = p₂(Λ); Λ is
    /// rescaled by the torus to I₁ = R_{c⁻¹}, J₂ = R_c for c = [J₂], and the
    /// vertex tuple is minimized over the action of the global units.
    fn decomposable_label(&self, t: &Matrix2) -> Result<RepLabel, SynthError> {
        let f = &self.field;
        let g = &self.group;
        let t1 = self.eigen.as_ref().unwrap().inv()?.mul(t);
        let ti = t1.inv()?;
        let i1 = ideal_of(f, &[&ti.a, &ti.c])?.inv();
        let j2 = ideal_of(f, &[&t1.c, &t1.d])?;
        let c = g.class_of(&j2);
        let rc = g.rep(c);
        let rci = g.rep(g.inverse(c));
        let y = is_principal(&j2.div(rc))
            .ok_or_else(|| SynthError::Inconsistent("J₂ outside its class".into()))?;
        let x = is_principal(&i1.div(rci)).ok_or_else(|| {
            SynthError::NotFree(format!("[Λ ∩ Ke₁] is not the inverse of class {c}"))
        })?;
        let mut m = Matrix2::diag(&x.inv()?, &y.inv()?).mul(&t1);
        let mut seen: BTreeSet<Vec<TreeVertex>> = BTreeSet::new();
        let mut frontier = vec![m.clone()];
        seen.insert(self.tuple(&m)?);
        let units = f.unit_generators();
        while let Some(cur) = frontier.pop() {
            for u in &units {
                m = Matrix2::diag(&f.int(1), u).mul(&cur);
                if seen.insert(self.tuple(&m)?) {
                    frontier.push(m.clone());
                }
            }
        }
        Ok(RepLabel {
            vertices: seen.into_iter().next().unwrap(),
            coset: c,
        })
    }

    /// The canonical square-root class J with [J]²·[𝔞] = 1.
    fn base_root(&self, a: &FracIdeal) -> Result<usize, SynthError> {
        let g = &self.group;
        g.sqrt_class(g.inverse(g.class_of(a))).ok_or_else(|| {
            SynthError::NotFree("the distance to v₀ does not have a square class".into())
        })
    }

    fn level_ideal(&self, verts: &[TreeVertex]) -> FracIdeal {
        let fac: Vec<(PrimePlace, i64)> = self
            .places
            .iter()
            .cloned()
            .zip(verts.iter().map(|v| v.level))
            .collect();
        FracIdeal::from_factors(&self.field, &fac)
    }

    /// Λ = T O² equals 𝔟·Λ₀ for the canonical lattice Λ₀ of its vertex
    /// tuple (Λ₀ ∩ K e₁ = 𝔞); the coset is [𝔟]·[J]⁻¹ in G_K(2).
    fn irreducible_label(&self, t: &Matrix2) -> Result<RepLabel, SynthError> {
        let g = &self.group;
        let vertices = self.tuple(t)?;
        let a = self.level_ideal(&vertices);
        let ti = t.inv()?;
        let i1 = ideal_of(&self.field, &[&ti.a, &ti.c])?.inv();
        let b = g.class_of(&i1.div(&a));
        let coset = g.mul(b, g.inverse(self.base_root(&a)?));
        if g.mul(coset, coset) != 0 {
            return Err(SynthError::NotFree(format!(
                "coset class {coset} is not 2-torsion"
            )));
        }
        Ok(RepLabel { vertices, coset })
    }
}

fn finish(labeller: &Labeller, rep: &RepSpec, t: Matrix2) -> Result<Representative, SynthError> {
    let ti = t.inv()?;
    let generators: Vec<Matrix2> = rep.gens.iter().map(|g| ti.mul(g).mul(&t)).collect();
    if !verify_integral_rep(&rep.field, &generators, &rep.group.relators()) {
        return Err(SynthError::Inconsistent(format!(
            "conjugate by {t} is not integral"
        )));
    }
    let label = labeller.label_of_conjugator(&t)?;
    Ok(Representative {
        label,
        conjugator: t,
        generators,
    })
}

/// One integral representative per conjugacy class counted in `report`,
/// with pairwise distinct labels.
pub fn synthesize_representatives(
    rep: &RepSpec,
    report: &CountReport,
) -> Result<Vec<Representative>, SynthError> {
    let count = report.count.exact().ok_or(SynthError::Symbolic)?;
    let labeller = Labeller::new(rep, report)?;
    let out = match report.classification {
        Classification::Decomposable => synth_decomposable(rep, &labeller)?,
        Classification::AbsolutelyIrreducible => synth_irreducible(rep, report, &labeller)?,
        Classification::IndecomposableAbelian => {
            if count != 1 || !verify_integral_rep(&rep.field, &rep.gens, &rep.group.relators()) {
                return Err(SynthError::Unsupported(
                    "abelian synthesis with more than one class".into(),
                ));
            }
            vec![finish(&labeller, rep, Matrix2::identity(&rep.field))?]
        }
    };
    let labels: BTreeSet<&RepLabel> = out.iter().map(|r| &r.label).collect();
    if out.len() as u64 != count || labels.len() != out.len() {
        return Err(SynthError::Inconsistent(format!(
            "{} representatives with {} distinct labels for a count of {count}",
            out.len(),
            labels.len()
        )));
    }
    Ok(out)
}

/// Λ = I₁(1,0) + J₂(a,1) in the eigenbasis with I₁ = R_{c⁻¹}, J₂ = R_c, for
/// every class c and every choice of local vertex at the places dividing
/// the eigenvalue differences; one representative per label.
fn synth_decomposable(
    rep: &RepSpec,
    labeller: &Labeller,
) -> Result<Vec<Representative>, SynthError> {
    let f = &rep.field;
    let g = &labeller.group;
    let p = labeller.eigen.clone().unwrap();
    let mut cond = Vec::new();
    for gen in &rep.gens {
        let d = gen.conj_by(&p)?;
        cond.push(&d.a - &d.d);
    }
    let refs: Vec<&NfElement> = cond.iter().collect();
    let cond = ideal_of(f, &refs)?;
    let mut found: BTreeMap<RepLabel, Representative> = BTreeMap::new();
    for c in 0..g.order() {
        let j2 = g.rep(c).clone();
        let i1 = g.rep(g.inverse(c)).clone();
        // Local choices: center offsets b with Λ_P = O(1,0) + O(b,1) after
        // rescaling by π^{-i}, π^{-j}.
        let mut choices: Vec<Vec<NfElement>> = Vec::new();
        for tree in &labeller.trees {
            let pl = &tree.place;
            let e = cond.valuation(pl);
            let shift = i1.valuation(pl) - j2.valuation(pl);
            let mut opts = vec![f.int(0)];
            for k in 1..=e {
                for s in residue_ring_reps(tree, k) {
                    if tree.val(&s) == Some(0) {
                        opts.push(&s * &tree.pi_pow(shift - k));
                    }
                }
            }
            choices.push(opts);
        }
        let mut extra: Vec<CrtTarget> = Vec::new();
        for (q, _) in i1.mul(&j2).factor() {
            if labeller.places.contains(&q) {
                continue;
            }
            let need = i1.valuation(&q) - j2.valuation(&q);
            if need > 0 {
                extra.push(CrtTarget {
                    place: q,
                    value: f.int(0),
                    precision: need - 1,
                });
            }
        }
        let basis = free_basis_of_ideal_pair(&i1, &j2)?.ok_or_else(|| {
            SynthError::Inconsistent(format!("R_c⁻¹ × R_c is not free for class {c}"))
        })?;
        let mut idx = vec![0usize; choices.len()];
        loop {
            let mut targets = extra.clone();
            for (n, tree) in labeller.trees.iter().enumerate() {
                let pl = &tree.place;
                let shift = i1.valuation(pl) - j2.valuation(pl);
                targets.push(CrtTarget {
                    place: pl.clone(),
                    value: choices[n][idx[n]].clone(),
                    precision: shift - 1,
                });
            }
            let a = crt_approximate(f, &targets)?;
            let t = p.mul(&upper(f, &a)).mul(&basis);
            let r = finish(labeller, rep, t)?;
            found.entry(r.label.clone()).or_insert(r);
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    Ok(found.into_values().collect())
}

/// For each Artin-trivial vertex tuple v and each class k of G_K(2):
/// Λ = J_k·(O(a,1) + 𝔞(1,0)) with 𝔞 = Π P^{level}, a ≡ center locally and
/// [J_k]²·[𝔞] = 1; the columns of a free basis of Λ give the conjugator.
fn synth_irreducible(
    rep: &RepSpec,
    report: &CountReport,
    labeller: &Labeller,
) -> Result<Vec<Representative>, SynthError> {
    let f = &rep.field;
    let g = &labeller.group;
    let mut out = Vec::new();
    for rec in report.records.iter().filter(|r| r.artin_trivial) {
        let a_ideal = labeller.level_ideal(&rec.tuple);
        let targets: Vec<CrtTarget> = labeller
            .places
            .iter()
            .zip(&rec.tuple)
            .map(|(pl, v)| CrtTarget {
                place: pl.clone(),
                value: v.center.clone(),
                precision: v.level - 1,
            })
            .collect();
        let a = crt_approximate(f, &targets)?;
        let root = labeller.base_root(&a_ideal)?;
        for k in g.two_torsion() {
            let j = g.rep(g.mul(root, k)).clone();
            let basis = free_basis_of_ideal_pair(&j, &j.mul(&a_ideal))?
                .ok_or_else(|| SynthError::Inconsistent("J × J𝔞 is not free".into()))?;
            let t = Matrix2::new(a.clone(), f.int(1), f.int(1), f.int(0)).mul(&basis);
            let r = finish(labeller, rep, t)?;
            if r.label.vertices != rec.tuple || r.label.coset != k {
                return Err(SynthError::Inconsistent(format!(
                    "round trip gave {:?} for {:?}/{k}",
                    r.label, rec.tuple
                )));
            }
            out.push(r);
        }
    }
    Ok(out)
}

/// The vertex T·v₀ at a place.
pub fn vertex_of_conjugator(tree: &LocalTree, t: &Matrix2) -> Result<TreeVertex, SynthError> {
    Ok(tree.vertex_of_lattice(t)?)
}

/// Integer matrix entries as a convenience for tests and callers.
pub fn int_matrix(field: &BaseField, rows: [[&str; 2]; 2]) -> Result<Matrix2, SynthError> {
    let s = |x: &str| x.to_string();
    Ok(Matrix2::parse(
        field,
        &[
            [s(rows[0][0]), s(rows[0][1])],
            [s(rows[1][0]), s(rows[1][1])],
        ],
    )?)
}
