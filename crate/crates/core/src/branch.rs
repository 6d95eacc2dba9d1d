//! Branches: the vertices of a local tree whose maximal orders contain a
//! matrix or a set of generators. Closed-form shapes for a single semisimple
//! matrix, the local type of a quadratic extension and its constant κ, the
//! invariance test for a global maximal order, the exceptional places of a
//! representation, exhaustive oracle-driven search, and the product of side
//! branches used by the counting formulas.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::arith;
use crate::ideals::{
    self, factor_rational_prime, ClassGroup, FracIdeal, IdealError, PlaceKind, PrimePlace,
};
use crate::localtree::{LocalTree, ProjPoint, TreeError, TreeVertex};
use crate::matrix::Matrix2;
use crate::numfield::{BaseField, NfElement, NumfieldError};

/// Bound on the number of vertices visited by a breadth-first search.
pub const DEFAULT_MAX_VERTICES: usize = 20_000;
/// Bound on the distance from the seeds reached by a breadth-first search.
pub const DEFAULT_DEPTH_BOUND: i64 = 64;
/// Bound on the order of a group enumerated by closure.
pub const MAX_GROUP_ORDER: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BranchError {
    #[error("eigenvalues do not lie in the base field")]
    EigenvaluesNotInField,
    #[error("eigenvalues have different valuations at the place")]
    UnequalValuations,
    #[error("the matrix is scalar or has a repeated eigenvalue")]
    Degenerate,
    #[error("expected a {expected} extension at the place, found {found}")]
    WrongExtensionType { expected: String, found: String },
    #[error("the extension is not ramified at the place")]
    NotRamified,
    #[error("eigenvalues split over the base field")]
    SplitEigenvalues,
    #[error("generator {0} is not integral")]
    NotIntegral(String),
    #[error("the span of the group has rank {0} < 4")]
    NotIrreducible(usize),
    #[error("group closure exceeded {0} elements")]
    GroupTooLarge(usize),
    #[error("search exceeded {0} (infinite branch suspected)")]
    SearchBoundExceeded(String),
    #[error("seed {0} is not in the branch")]
    SeedNotInBranch(String),
    #[error("closed form and search disagree: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Numfield(#[from] NumfieldError),
}

/// Local type of K_P(√δ)/K_P.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum LocalExtension {
    Split,
    Unramified,
    Ramified,
}

impl LocalExtension {
    fn name(self) -> &'static str {
        match self {
            LocalExtension::Split => "split",
            LocalExtension::Unramified => "unramified",
            LocalExtension::Ramified => "ramified",
        }
    }
}

/// Representatives Σ r_i π^i (0 ≤ i < k) of the residue ring O/P^k.
pub fn residue_ring_reps(tree: &LocalTree, k: i64) -> Vec<NfElement> {
    let mut out = vec![tree.field.int(0)];
    for i in 0..k {
        let pk = tree.pi_pow(i);
        let mut next = Vec::with_capacity(out.len() * tree.residues().len());
        for x in &out {
            for r in tree.residues() {
                next.push(x + &(r * &pk));
            }
        }
        out = next;
    }
    out
}

/// max over s of min(ν(u − s²), k) with s running over O/P^k.
fn best_square_approx(tree: &LocalTree, u: &NfElement, k: i64) -> i64 {
    residue_ring_reps(tree, k)
        .iter()
        .map(|s| tree.val(&(u - &(s * s))).map_or(k, |v| v.min(k)))
        .max()
        .unwrap_or(0)
}

fn dyadic_e(place: &PrimePlace) -> i64 {
    place.valuation(&place.field.int(2)).unwrap()
}

/// δ divided by the largest even power of the uniformizer, and ν(δ).
fn even_normalize(tree: &LocalTree, delta: &NfElement) -> Result<(NfElement, i64), BranchError> {
    let v = tree.val(delta).ok_or(BranchError::Degenerate)?;
    Ok((delta * &tree.pi_pow(-2 * v.div_euclid(2)), v))
}

/// The local type of K_P(√δ) for δ ≠ 0.
pub fn local_extension(
    place: &PrimePlace,
    delta: &NfElement,
) -> Result<LocalExtension, BranchError> {
    let tree = LocalTree::new(place);
    let delta = tree.field.lift(delta)?;
    let (u, v) = even_normalize(&tree, &delta)?;
    if v.rem_euclid(2) == 1 {
        return Ok(LocalExtension::Ramified);
    }
    if place.p != 2 {
        return Ok(if best_square_approx(&tree, &u, 1) >= 1 {
            LocalExtension::Split
        } else {
            LocalExtension::Unramified
        });
    }
    let e = dyadic_e(place);
    let m = best_square_approx(&tree, &u, 2 * e + 1);
    Ok(if m > 2 * e {
        LocalExtension::Split
    } else if m == 2 * e {
        LocalExtension::Unramified
    } else {
        LocalExtension::Ramified
    })
}

/// The constant κ = ω(σ(π_ω)/π_ω − 1) of a ramified extension K_P(√δ),
/// with ω the normalized valuation of the extension.
pub fn kappa(place: &PrimePlace, delta: &NfElement) -> Result<i64, BranchError> {
    let tree = LocalTree::new(place);
    let delta = tree.field.lift(delta)?;
    if local_extension(place, &delta)? != LocalExtension::Ramified {
        return Err(BranchError::NotRamified);
    }
    let (u, v) = even_normalize(&tree, &delta)?;
    let e = if place.p == 2 { dyadic_e(place) } else { 0 };
    if v.rem_euclid(2) == 1 {
        return Ok(2 * e);
    }
    // π_ω = (x + √u)/π^((m−1)/2) with m = ν(x² − u) maximal and odd.
    let m = best_square_approx(&tree, &u, 2 * e);
    Ok(2 * e - m)
}

/// The places where K(√δ)/K ramifies.
pub fn ramified_places(
    field: &BaseField,
    delta: &NfElement,
) -> Result<Vec<PrimePlace>, BranchError> {
    let delta = field.lift(delta)?;
    if delta.is_zero() {
        return Err(BranchError::Degenerate);
    }
    let n = field.norm(&delta);
    let mut primes: BTreeSet<u64> = BTreeSet::from([2]);
    for part in [n.numer(), n.denom()] {
        for (p, _) in arith::factorize_big(part) {
            primes.insert(p.to_u64().expect("prime fits in u64"));
        }
    }
    let mut out = Vec::new();
    for p in primes {
        for pl in factor_rational_prime(p, field)? {
            if local_extension(&pl, &delta)? == LocalExtension::Ramified {
                out.push(pl);
            }
        }
    }
    Ok(out)
}

/// The ideal I[L/K] of L = K(√δ) as a place-exponent vector over the
/// places of K: exponent κ + 1 of the place of L above each ramified place.
pub fn ideal_ilk(
    field: &BaseField,
    delta: &NfElement,
) -> Result<Vec<(PrimePlace, i64)>, BranchError> {
    ramified_places(field, delta)?
        .into_iter()
        .map(|pl| {
            let k = kappa(&pl, delta)?;
            Ok((pl, k + 1))
        })
        .collect()
}

/// Whether the ratio a/b of the eigenvalues of r is a unit congruent to 1
/// modulo I[L/K], the condition for r to lie in a maximal order of the
/// global quadratic algebra stable under the Galois action.
pub fn global_invariance_test(field: &BaseField, r: &Matrix2) -> Result<bool, BranchError> {
    let r = r.lift(field)?;
    let det = r.det();
    let tr = r.trace();
    let disc = &(&tr * &tr) - &(&det * &field.int(4));
    if det.is_zero() {
        return Err(BranchError::Degenerate);
    }
    if disc.is_zero() {
        return Ok(r.is_scalar());
    }
    if disc.sqrt().is_some() {
        return Err(BranchError::SplitEigenvalues);
    }
    // s = r²/det(r) has eigenvalues a/b and b/a and determinant 1.
    let s = r.mul(&r).scale(&det.inv()?);
    if !field.is_integral(&s.trace()) {
        return Ok(false);
    }
    let s1 = s.sub(&Matrix2::identity(field));
    let n = s1.det();
    for (pl, exp) in ideal_ilk(field, &disc)? {
        // ω(x) = ν_P(N x) at a ramified place.
        if let Some(v) = pl.val_or_inf(&n) {
            if v < exp {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Data of the commutative order O_P[r] inside its integral closure
/// H_P = O_P[s] with s = (r − c)/π^k and k maximal.
#[derive(Clone, Debug)]
pub struct LocalConductor {
    pub c: NfElement,
    pub k: i64,
    pub s: Matrix2,
}

fn char_integral(tree: &LocalTree, m: &Matrix2) -> bool {
    let ok = |x: &NfElement| tree.val(x).is_none_or(|v| v >= 0);
    ok(&m.trace()) && ok(&m.det())
}

/// The largest k with (r − c)/π^k of integral characteristic polynomial.
pub fn local_conductor(tree: &LocalTree, r: &Matrix2) -> Result<LocalConductor, BranchError> {
    let r = r.lift(&tree.field)?;
    if r.is_scalar() {
        return Err(BranchError::Degenerate);
    }
    if !char_integral(tree, &r) {
        return Err(BranchError::NotIntegral(r.to_string()));
    }
    let id = Matrix2::identity(&tree.field);
    let shifted = |c: &NfElement, k: i64| r.sub(&id.scale(c)).scale(&tree.pi_pow(-k));
    let mut level: Vec<NfElement> = vec![tree.field.int(0)];
    let mut k = 0;
    loop {
        let pk = tree.pi_pow(k);
        let mut next: Vec<NfElement> = Vec::new();
        for c in &level {
            for t in tree.residues() {
                let c2 = c + &(t * &pk);
                if char_integral(tree, &shifted(&c2, k + 1)) {
                    next.push(c2);
                }
            }
        }
        if next.is_empty() {
            let c = level[0].clone();
            return Ok(LocalConductor {
                s: shifted(&c, k),
                c,
                k,
            });
        }
        level = next;
        k += 1;
        if k > DEFAULT_DEPTH_BOUND {
            return Err(BranchError::Degenerate);
        }
    }
}

/// A vertex whose order contains the integral closure O_P[s]: the lattice
/// O_P[s]·w for a cyclic vector w.
fn stem_seed(tree: &LocalTree, s: &Matrix2) -> Result<TreeVertex, BranchError> {
    let f = &tree.field;
    for (x, y) in [(1, 0), (0, 1), (1, 1)] {
        let (x, y) = (f.int(x), f.int(y));
        let (sx, sy) = s.apply(&x, &y);
        let b = Matrix2::from_columns((&x, &y), (&sx, &sy));
        if !b.det().is_zero() {
            return Ok(tree.vertex_of_lattice(&b)?);
        }
    }
    Err(BranchError::Degenerate)
}

/// r/π^(ν(det r)/2), or `None` when ν(det r) is odd and r fixes no vertex.
fn normalize_det(tree: &LocalTree, r: &Matrix2) -> Result<Option<Matrix2>, BranchError> {
    let r = r.lift(&tree.field)?;
    let v = tree.val(&r.det()).ok_or(BranchError::Degenerate)?;
    if v.rem_euclid(2) == 1 {
        return Ok(None);
    }
    Ok(Some(r.scale(&tree.pi_pow(-v / 2))))
}

/// Shape of a branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchShape {
    ApartmentTube {
        width: i64,
        ends: (ProjPoint, ProjPoint),
    },
    SingleVertexBall {
        center: TreeVertex,
        radius: i64,
    },
    EdgeBall {
        centers: [TreeVertex; 2],
        radius: i64,
    },
    Empty,
    Explicit,
}

/// A vertex outside the stem together with its nearest stem vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Foliage {
    pub vertex: TreeVertex,
    pub anchor: TreeVertex,
    pub depth: i64,
}

/// A branch at one place. For infinite branches the stem is a window of
/// the apartment and `truncated` is set.
#[derive(Clone, Debug)]
pub struct BranchReport {
    pub place: PrimePlace,
    pub shape: BranchShape,
    pub stem: Vec<TreeVertex>,
    pub foliage: Vec<Foliage>,
    /// Vertices of a branch without a commutative stem.
    pub others: Vec<TreeVertex>,
    pub truncated: bool,
}

impl BranchReport {
    fn empty(place: &PrimePlace) -> Self {
        BranchReport {
            place: place.clone(),
            shape: BranchShape::Empty,
            stem: vec![],
            foliage: vec![],
            others: vec![],
            truncated: false,
        }
    }

    /// Every listed vertex, sorted.
    pub fn vertices(&self) -> Vec<TreeVertex> {
        let mut v: BTreeSet<TreeVertex> = self.stem.iter().cloned().collect();
        v.extend(self.foliage.iter().map(|f| f.vertex.clone()));
        v.extend(self.others.iter().cloned());
        v.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.vertices().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Foliage hanging from one anchor, with the anchor itself at depth 0.
    pub fn side_branch(&self, anchor: &TreeVertex) -> Vec<(TreeVertex, i64)> {
        let mut out = vec![(anchor.clone(), 0)];
        out.extend(
            self.foliage
                .iter()
                .filter(|f| &f.anchor == anchor)
                .map(|f| (f.vertex.clone(), f.depth)),
        );
        out
    }

    /// Graphviz rendering: stem edges solid, foliage edges dashed.
    /// Edges point from the coarser ball to the finer one, that is from
    /// level n to level n + 1.
    pub fn to_dot(&self, tree: &LocalTree) -> String {
        let verts = self.vertices();
        let stem: BTreeSet<&TreeVertex> = self.stem.iter().collect();
        let idx: BTreeMap<&TreeVertex, usize> =
            verts.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut s = String::new();
        let _ = writeln!(s, "digraph branch {{");
        let _ = writeln!(s, "  label=\"branch at {}\";", self.place.name());
        for (v, i) in &idx {
            let style = if stem.contains(v) { "filled" } else { "solid" };
            let _ = writeln!(s, "  n{i} [label=\"{v}\", style={style}];");
        }
        for (i, v) in verts.iter().enumerate() {
            for w in &verts[i + 1..] {
                if tree.distance(v, w) == 1 {
                    let style = if stem.contains(v) && stem.contains(w) {
                        "solid"
                    } else {
                        "dashed"
                    };
                    let (from, to) = if v.level <= w.level { (v, w) } else { (w, v) };
                    let _ = writeln!(s, "  n{} -> n{} [style={style}];", idx[from], idx[to]);
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Vertices reachable from `anchor` through branch vertices outside the
/// stem, with their distance to the anchor; the anchor comes first.
pub fn side_branch_bfs(
    tree: &LocalTree,
    gens: &[Matrix2],
    is_stem: &dyn Fn(&TreeVertex) -> Result<bool, BranchError>,
    anchor: &TreeVertex,
    max_vertices: usize,
) -> Result<Vec<(TreeVertex, i64)>, BranchError> {
    let mut seen: BTreeSet<TreeVertex> = BTreeSet::from([anchor.clone()]);
    let mut out = vec![(anchor.clone(), 0)];
    let mut queue = VecDeque::from([(anchor.clone(), 0)]);
    while let Some((x, d)) = queue.pop_front() {
        for y in tree.residual_invariant_lines(&x, gens)? {
            if seen.contains(&y) || is_stem(&y)? {
                continue;
            }
            seen.insert(y.clone());
            out.push((y.clone(), d + 1));
            queue.push_back((y, d + 1));
            if out.len() > max_vertices {
                return Err(BranchError::SearchBoundExceeded(format!(
                    "{max_vertices} vertices"
                )));
            }
        }
    }
    Ok(out)
}

/// Moebius fixed point of the eigenvector for the eigenvalue λ.
fn eigen_point(r: &Matrix2, lambda: &NfElement) -> (NfElement, NfElement) {
    let (x, y) = (r.b.clone(), lambda - &r.a);
    if !x.is_zero() || !y.is_zero() {
        (x, y)
    } else {
        (lambda - &r.d, r.c.clone())
    }
}

fn to_proj(v: &(NfElement, NfElement)) -> ProjPoint {
    if v.1.is_zero() {
        ProjPoint::Infinity
    } else {
        ProjPoint::Finite(&v.0 / &v.1)
    }
}

/// Branch of a matrix with distinct eigenvalues in K: the vertices within
/// distance ν(1 − a/b) of the maximal path joining its two fixed points.
/// The stem is listed for `window` steps on either side of the projection
/// of the root.
pub fn branch_split(
    r: &Matrix2,
    place: &PrimePlace,
    window: i64,
) -> Result<BranchReport, BranchError> {
    let tree = LocalTree::new(place);
    let field = &tree.field;
    let r = r.lift(field)?;
    let tr = r.trace();
    let disc = &(&tr * &tr) - &(&r.det() * &field.int(4));
    if disc.is_zero() {
        return Err(BranchError::Degenerate);
    }
    let sq = disc.sqrt().ok_or(BranchError::EigenvaluesNotInField)?;
    let half = field.rational(num_rational::BigRational::new(
        BigInt::one(),
        BigInt::from(2),
    ));
    let a = &(&tr + &sq) * &half;
    let b = &(&tr - &sq) * &half;
    if a.is_zero() || b.is_zero() {
        return Err(BranchError::Degenerate);
    }
    let (va, vb) = (tree.val(&a).unwrap(), tree.val(&b).unwrap());
    if va != vb {
        return Err(BranchError::UnequalValuations);
    }
    let (ea, eb) = (eigen_point(&r, &a), eigen_point(&r, &b));
    let ends = (to_proj(&ea), to_proj(&eb));
    let width = tree.val(&(&field.int(1) - &(&a / &b))).unwrap();
    // g maps the standard apartment (∞, 0) onto the path (z_a, z_b).
    let g = Matrix2::from_columns((&ea.0, &ea.1), (&eb.0, &eb.1));
    let gi = g.inv()?;
    let w = tree.moebius_apply(&gi, &tree.root())?;
    let proj = match tree.val(&w.center) {
        None => w.level,
        Some(m) => m.min(w.level),
    };
    let zero = field.int(0);
    let mut stem = Vec::new();
    for n in proj - window..=proj + window {
        stem.push(tree.moebius_apply(&g, &tree.vertex(&zero, n)?)?);
    }
    let mut foliage = Vec::new();
    for x in &stem {
        for y in tree.ball(x, width)? {
            let d = tree.distance(x, &y);
            if d > 0 && tree.distance_to_path(&y, &ends.0, &ends.1)? == d {
                foliage.push(Foliage {
                    vertex: y,
                    anchor: x.clone(),
                    depth: d,
                });
            }
        }
    }
    foliage.sort();
    Ok(BranchReport {
        place: place.clone(),
        shape: BranchShape::ApartmentTube { width, ends },
        stem,
        foliage,
        others: vec![],
        truncated: true,
    })
}

fn type_guard(
    place: &PrimePlace,
    disc: &NfElement,
    expected: LocalExtension,
) -> Result<(), BranchError> {
    let found = local_extension(place, disc)?;
    if found != expected {
        return Err(BranchError::WrongExtensionType {
            expected: expected.name().into(),
            found: found.name().into(),
        });
    }
    Ok(())
}

fn disc_of(m: &Matrix2) -> NfElement {
    let tr = m.trace();
    let f = m.a.field();
    &(&tr * &tr) - &(&m.det() * &NfElement::from_int(f, 4))
}

/// Branch of a matrix whose eigenvalues generate the unramified quadratic
/// extension of the completion: the ball of radius ω(1 − a/b) around the
/// unique vertex containing the integral closure of K_P[r].
pub fn branch_unramified(r: &Matrix2, place: &PrimePlace) -> Result<BranchReport, BranchError> {
    let tree = LocalTree::new(place);
    let r = r.lift(&tree.field)?;
    let disc = disc_of(&r);
    if disc.is_zero() {
        return Err(BranchError::Degenerate);
    }
    type_guard(place, &disc, LocalExtension::Unramified)?;
    let Some(r) = normalize_det(&tree, &r)? else {
        return Ok(BranchReport::empty(place));
    };
    if !char_integral(&tree, &r) {
        return Ok(BranchReport::empty(place));
    }
    let cond = local_conductor(&tree, &r)?;
    let center = stem_seed(&tree, &cond.s)?;
    // ω(a − b) with ω extending ν and ab a unit.
    let radius = tree.val(&disc_of(&r)).unwrap() / 2;
    let foliage = tree
        .ball(&center, radius)?
        .into_iter()
        .filter(|v| v != &center)
        .map(|v| Foliage {
            depth: tree.distance(&center, &v),
            vertex: v,
            anchor: center.clone(),
        })
        .collect();
    Ok(BranchReport {
        place: place.clone(),
        shape: BranchShape::SingleVertexBall {
            center: center.clone(),
            radius,
        },
        stem: vec![center],
        foliage,
        others: vec![],
        truncated: false,
    })
}

/// Branch of a matrix whose eigenvalues generate a ramified quadratic
/// extension: empty when ω(r) is odd, and otherwise the vertices within
/// d = (ω(1 − a/b) − κ − 1)/2 of the edge of orders containing the integral
/// closure of K_P[r].
pub fn branch_ramified(r: &Matrix2, place: &PrimePlace) -> Result<BranchReport, BranchError> {
    let tree = LocalTree::new(place);
    let r = r.lift(&tree.field)?;
    let disc = disc_of(&r);
    if disc.is_zero() {
        return Err(BranchError::Degenerate);
    }
    type_guard(place, &disc, LocalExtension::Ramified)?;
    let Some(r) = normalize_det(&tree, &r)? else {
        return Ok(BranchReport::empty(place));
    };
    if !char_integral(&tree, &r) {
        return Ok(BranchReport::empty(place));
    }
    let k = kappa(place, &disc)?;
    let num = tree.val(&disc_of(&r)).unwrap() - k - 1;
    if num.rem_euclid(2) != 0 {
        return Err(BranchError::Inconsistent(format!(
            "ω(1 − a/b) − κ − 1 = {num} is odd"
        )));
    }
    let radius = num / 2;
    let cond = local_conductor(&tree, &r)?;
    let u = stem_seed(&tree, &cond.s)?;
    let next = tree.residual_invariant_lines(&u, std::slice::from_ref(&cond.s))?;
    if next.len() != 1 {
        return Err(BranchError::Inconsistent(format!(
            "{} stem neighbors at a ramified place",
            next.len()
        )));
    }
    let mut centers = [u, next[0].clone()];
    centers.sort();
    let mut foliage = Vec::new();
    for (i, x) in centers.iter().enumerate() {
        let other = &centers[1 - i];
        for y in tree.ball(x, radius)? {
            let d = tree.distance(x, &y);
            if d > 0 && tree.distance(other, &y) == d + 1 {
                foliage.push(Foliage {
                    vertex: y,
                    anchor: x.clone(),
                    depth: d,
                });
            }
        }
    }
    foliage.sort();
    Ok(BranchReport {
        place: place.clone(),
        shape: BranchShape::EdgeBall {
            centers: centers.clone(),
            radius,
        },
        stem: centers.to_vec(),
        foliage,
        others: vec![],
        truncated: false,
    })
}

/// Dispatches a single non-scalar matrix to the closed form for its local
/// extension type.
pub fn branch_closed_form(
    r: &Matrix2,
    place: &PrimePlace,
    window: i64,
) -> Result<BranchReport, BranchError> {
    let r = r.lift(&place.field)?;
    let disc = disc_of(&r);
    if disc.is_zero() {
        return Err(BranchError::Degenerate);
    }
    match local_extension(place, &disc)? {
        LocalExtension::Split => branch_split(&r, place, window),
        LocalExtension::Unramified => branch_unramified(&r, place),
        LocalExtension::Ramified => branch_ramified(&r, place),
    }
}

fn commute(x: &Matrix2, y: &Matrix2) -> bool {
    x.mul(y) == y.mul(x)
}

/// Exhaustive search from the seeds, expanding through the residual line
/// test with the order-membership oracle as ground truth. When the
/// generators commute, vertices containing the integral closure of the
/// algebra they span form the stem and the rest is foliage.
pub fn branch_bfs(
    gens: &[Matrix2],
    place: &PrimePlace,
    seeds: &[TreeVertex],
) -> Result<BranchReport, BranchError> {
    branch_bfs_with(
        gens,
        place,
        seeds,
        DEFAULT_DEPTH_BOUND,
        DEFAULT_MAX_VERTICES,
    )
}

pub fn branch_bfs_with(
    gens: &[Matrix2],
    place: &PrimePlace,
    seeds: &[TreeVertex],
    depth_bound: i64,
    max_vertices: usize,
) -> Result<BranchReport, BranchError> {
    let tree = LocalTree::new(place);
    let gens: Vec<Matrix2> = gens
        .iter()
        .map(|g| g.lift(&tree.field))
        .collect::<Result<_, _>>()?;
    let contains_all = |v: &TreeVertex| -> Result<bool, BranchError> {
        for g in &gens {
            if !tree.order_contains(v, g)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut seen: BTreeSet<TreeVertex> = BTreeSet::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        if !contains_all(s)? {
            return Err(BranchError::SeedNotInBranch(s.to_string()));
        }
        if seen.insert(s.clone()) {
            queue.push_back((s.clone(), 0));
        }
    }
    while let Some((x, d)) = queue.pop_front() {
        for y in tree.residual_invariant_lines(&x, &gens)? {
            if seen.contains(&y) {
                continue;
            }
            if !contains_all(&y)? {
                return Err(BranchError::Inconsistent(format!(
                    "residual line test admitted {y}"
                )));
            }
            if d + 1 > depth_bound {
                return Err(BranchError::SearchBoundExceeded(format!(
                    "depth {depth_bound}"
                )));
            }
            seen.insert(y.clone());
            queue.push_back((y, d + 1));
            if seen.len() > max_vertices {
                return Err(BranchError::SearchBoundExceeded(format!(
                    "{max_vertices} vertices"
                )));
            }
        }
    }
    let verts: Vec<TreeVertex> = seen.into_iter().collect();
    let shape = classify_shape(&tree, &verts)?;
    let key = gens.iter().find(|g| !g.is_scalar());
    let commutative = gens.iter().all(|x| gens.iter().all(|y| commute(x, y)));
    let mut report = BranchReport {
        place: place.clone(),
        shape,
        stem: vec![],
        foliage: vec![],
        others: vec![],
        truncated: false,
    };
    let stem_gen = match (key, commutative) {
        (Some(r), true) => match normalize_det(&tree, r)? {
            Some(rn) if char_integral(&tree, &rn) => Some(local_conductor(&tree, &rn)?.s),
            _ => None,
        },
        _ => None,
    };
    match stem_gen {
        Some(s) => {
            for v in &verts {
                if tree.order_contains(v, &s)? {
                    report.stem.push(v.clone());
                }
            }
            for v in &verts {
                if report.stem.contains(v) {
                    continue;
                }
                let (anchor, depth) = report
                    .stem
                    .iter()
                    .map(|a| (a, tree.distance(a, v)))
                    .min_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(y.0)))
                    .map(|(a, d)| (a.clone(), d))
                    .ok_or_else(|| {
                        BranchError::Inconsistent("commutative branch without stem".into())
                    })?;
                report.foliage.push(Foliage {
                    vertex: v.clone(),
                    anchor,
                    depth,
                });
            }
            report.foliage.sort();
        }
        None => report.others = verts,
    }
    Ok(report)
}

/// Recognizes a finite vertex set as a ball around a vertex or an edge.
pub fn classify_shape(tree: &LocalTree, verts: &[TreeVertex]) -> Result<BranchShape, BranchError> {
    if verts.is_empty() {
        return Ok(BranchShape::Empty);
    }
    let ecc: Vec<i64> = verts
        .iter()
        .map(|v| verts.iter().map(|w| tree.distance(v, w)).max().unwrap())
        .collect();
    let rmin = *ecc.iter().min().unwrap();
    let centers: Vec<&TreeVertex> = verts
        .iter()
        .zip(&ecc)
        .filter(|(_, e)| **e == rmin)
        .map(|(v, _)| v)
        .collect();
    let set: BTreeSet<&TreeVertex> = verts.iter().collect();
    if centers.len() == 1 {
        let ball = tree.ball(centers[0], rmin)?;
        if ball.len() == verts.len() && ball.iter().all(|v| set.contains(v)) {
            return Ok(BranchShape::SingleVertexBall {
                center: centers[0].clone(),
                radius: rmin,
            });
        }
    }
    if centers.len() == 2 && tree.distance(centers[0], centers[1]) == 1 {
        let mut u: BTreeSet<TreeVertex> = tree.ball(centers[0], rmin - 1)?.into_iter().collect();
        u.extend(tree.ball(centers[1], rmin - 1)?);
        if u.len() == verts.len() && u.iter().all(|v| set.contains(v)) {
            return Ok(BranchShape::EdgeBall {
                centers: [centers[0].clone(), centers[1].clone()],
                radius: rmin - 1,
            });
        }
    }
    Ok(BranchShape::Explicit)
}

/// All elements of the group generated by invertible matrices of finite
/// order, by closure under right multiplication.
pub fn group_closure(gens: &[Matrix2]) -> Result<Vec<Matrix2>, BranchError> {
    let f = gens
        .first()
        .map(|g| g.a.field())
        .ok_or(BranchError::Degenerate)?;
    let one = NfElement::one(f);
    let id = Matrix2::scalar(&one);
    let mut seen: HashSet<Matrix2> = HashSet::from([id.clone()]);
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.mul(g);
            if seen.insert(y.clone()) {
                out.push(y.clone());
                queue.push_back(y);
                if out.len() > MAX_GROUP_ORDER {
                    return Err(BranchError::GroupTooLarge(MAX_GROUP_ORDER));
                }
            }
        }
    }
    Ok(out)
}

/// Integer coordinates of the O_K-span of a finite group of integral
/// matrices in M₂(O_K) ≅ Z^(4·deg), in Hermite normal form.
pub fn span_hnf(field: &BaseField, group: &[Matrix2]) -> Result<Vec<Vec<BigInt>>, BranchError> {
    let deg = field.degree();
    let mut rows = Vec::new();
    for g in group {
        let g = g.lift(field)?;
        if !g.is_integral(field) {
            return Err(BranchError::NotIntegral(g.to_string()));
        }
        for beta in field.basis() {
            let row: Vec<BigInt> = g
                .scale(&beta)
                .entries()
                .iter()
                .flat_map(|x| field.coords(x))
                .map(|c| c.to_integer())
                .collect();
            rows.push(row);
        }
    }
    Ok(arith::hnf_rows(&rows, 4 * deg))
}

/// The places where the O_K-span of an integral representation differs from
/// M₂(O_K): those dividing the module index at which the reduced span has
/// F_q-dimension below 4.
pub fn exceptional_places(
    gens: &[Matrix2],
    field: &BaseField,
) -> Result<Vec<PrimePlace>, BranchError> {
    let group = group_closure(gens)?;
    let hnf = span_hnf(field, &group)?;
    let n = 4 * field.degree();
    if hnf.len() < n {
        return Err(BranchError::NotIrreducible(hnf.len() / field.degree()));
    }
    let index = (0..n).fold(BigInt::one(), |acc, i| acc * &hnf[i][i]);
    let mut out = Vec::new();
    for (p, _) in arith::factorize_big(&index) {
        let p = p.to_u64().expect("prime fits in u64");
        for pl in factor_rational_prime(p, field)? {
            let f = if pl.kind == PlaceKind::Inert { 2 } else { 1 };
            let mut red = Vec::new();
            for row in &hnf {
                let m: Vec<NfElement> = row
                    .chunks(field.degree())
                    .map(|c| field.element_int(c))
                    .collect();
                let mut r = Vec::new();
                for x in &m {
                    let i = pl.residue_index(x)? as i64;
                    r.push(i % p as i64);
                    if f == 2 {
                        r.push(i / p as i64);
                    }
                }
                red.push(r);
            }
            if arith::rank_mod_p(&red, p as i64) < 4 * f {
                out.push(pl);
            }
        }
    }
    Ok(out)
}

/// One factor of a side-branch product: the vertices hanging from an anchor
/// at one place, the anchor first, each with its distance to the anchor.
#[derive(Clone, Debug)]
pub struct SideBranch {
    pub place: PrimePlace,
    pub anchor: TreeVertex,
    pub vertices: Vec<(TreeVertex, i64)>,
    /// Index into `vertices` of the component of the distinguished vertex.
    pub base: usize,
}

impl SideBranch {
    pub fn depth(&self) -> i64 {
        self.vertices.iter().map(|x| x.1).max().unwrap_or(0)
    }
}

/// The product of side branches over the exceptional places.
#[derive(Clone, Debug)]
pub struct SideBranchProduct {
    pub field: BaseField,
    pub factors: Vec<SideBranch>,
}

impl SideBranchProduct {
    /// Number of vertex tuples.
    pub fn size(&self) -> usize {
        self.factors.iter().map(|f| f.vertices.len()).product()
    }

    /// All index tuples in lexicographic order; a single empty tuple when
    /// there are no factors.
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![vec![]];
        for f in &self.factors {
            out = out
                .into_iter()
                .flat_map(|t| (0..f.vertices.len()).map(move |i| [t.clone(), vec![i]].concat()))
                .collect();
        }
        out
    }

    /// The distinguished tuple.
    pub fn base_tuple(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.base).collect()
    }

    /// Π P^{d(anchor, v_P)}.
    pub fn distance_to_anchor(&self, t: &[usize]) -> FracIdeal {
        let fac: Vec<(PrimePlace, i64)> = self
            .factors
            .iter()
            .zip(t)
            .map(|(f, &i)| (f.place.clone(), f.vertices[i].1))
            .collect();
        FracIdeal::from_factors(&self.field, &fac)
    }

    /// Π P^{d(v₀, v_P)}, measured inside each side branch.
    pub fn distance_to_base(&self, t: &[usize]) -> FracIdeal {
        let fac: Vec<(PrimePlace, i64)> = self
            .factors
            .iter()
            .zip(t)
            .map(|(f, &i)| {
                let tree = LocalTree::new(&f.place);
                (
                    f.place.clone(),
                    tree.distance(&f.vertices[i].0, &f.vertices[f.base].0),
                )
            })
            .collect();
        FracIdeal::from_factors(&self.field, &fac)
    }

    /// Whether the ideal-valued distance to the distinguished vertex has a
    /// square class.
    pub fn artin_trivial(&self, t: &[usize], g: &ClassGroup) -> bool {
        ideals::artin_distance_trivial(&self.distance_to_base(t), g)
    }
}

/// Assembles the product from per-place side branches; `base` gives the
/// distinguished vertex at each place, which must lie in the side branch.
pub fn side_branch_product(
    field: &BaseField,
    branches: Vec<(PrimePlace, Vec<(TreeVertex, i64)>)>,
    base: &[TreeVertex],
) -> Result<SideBranchProduct, BranchError> {
    let mut factors = Vec::new();
    for ((place, vertices), b) in branches.into_iter().zip(base) {
        let idx = vertices
            .iter()
            .position(|(v, _)| v == b)
            .ok_or_else(|| BranchError::SeedNotInBranch(b.to_string()))?;
        let anchor = vertices.first().ok_or(BranchError::Degenerate)?.0.clone();
        factors.push(SideBranch {
            place,
            anchor,
            vertices,
            base: idx,
        });
    }
    Ok(SideBranchProduct {
        field: field.clone(),
        factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideals::place_by_name;

    fn q() -> BaseField {
        BaseField::Rational
    }

    fn k5() -> BaseField {
        BaseField::from_d(-5).unwrap()
    }

    fn m(f: &BaseField, x: [[&str; 2]; 2]) -> Matrix2 {
        let rows = [
            [x[0][0].to_string(), x[0][1].to_string()],
            [x[1][0].to_string(), x[1][1].to_string()],
        ];
        Matrix2::parse(f, &rows).unwrap()
    }

    fn place(f: &BaseField, p: u64) -> PrimePlace {
        factor_rational_prime(p, f).unwrap().remove(0)
    }

    #[test]
    fn extension_types() {
        let f = q();
        let p2 = place(&f, 2);
        let t = |d: i64, pl: &PrimePlace| local_extension(pl, &f.int(d)).unwrap();
        assert_eq!(t(-1, &p2), LocalExtension::Ramified);
        assert_eq!(t(-3, &p2), LocalExtension::Unramified);
        assert_eq!(t(-7, &p2), LocalExtension::Split);
        assert_eq!(t(2, &p2), LocalExtension::Ramified);
        let p5 = place(&f, 5);
        assert_eq!(t(-1, &p5), LocalExtension::Split);
        assert_eq!(t(2, &p5), LocalExtension::Unramified);
        assert_eq!(t(5, &p5), LocalExtension::Ramified);
        let k = k5();
        let two = place(&k, 2);
        assert_eq!(
            local_extension(&two, &k.int(-1)).unwrap(),
            LocalExtension::Unramified
        );
    }

    #[test]
    fn kappa_values() {
        let f = q();
        assert_eq!(kappa(&place(&f, 2), &f.int(-1)).unwrap(), 1);
        assert_eq!(kappa(&place(&f, 2), &f.int(2)).unwrap(), 2);
        assert_eq!(kappa(&place(&f, 2), &f.int(3)).unwrap(), 1);
        assert_eq!(kappa(&place(&f, 3), &f.int(-3)).unwrap(), 0);
        assert_eq!(kappa(&place(&f, 7), &f.int(7)).unwrap(), 0);
        assert_eq!(
            kappa(&place(&f, 2), &f.int(-3)),
            Err(BranchError::NotRamified)
        );
    }

    #[test]
    fn ilk_ideals() {
        let f = q();
        let i = ideal_ilk(&f, &f.int(-1)).unwrap();
        assert_eq!(i.len(), 1);
        assert_eq!((i[0].0.p, i[0].1), (2, 2));
        let i = ideal_ilk(&f, &f.int(-3)).unwrap();
        assert_eq!(i.len(), 1);
        assert_eq!((i[0].0.p, i[0].1), (3, 1));
        let k = k5();
        assert!(ideal_ilk(&k, &k.int(-1)).unwrap().is_empty());
    }

    #[test]
    fn invariance() {
        let f = q();
        assert!(global_invariance_test(&f, &m(&f, [["0", "-1"], ["1", "0"]])).unwrap());
        assert!(global_invariance_test(&f, &m(&f, [["0", "-1"], ["1", "-1"]])).unwrap());
        // Eigenvalues 1 ± i: the ratio i has norm one but is not ≡ 1.
        assert!(!global_invariance_test(&f, &m(&f, [["1", "-1"], ["1", "1"]])).unwrap());
        // Eigenvalues (1 ± √−7)/2... ratio is not a unit.
        assert!(!global_invariance_test(&f, &m(&f, [["0", "-2"], ["1", "1"]])).unwrap());
        assert_eq!(
            global_invariance_test(&f, &m(&f, [["1", "0"], ["0", "-1"]])),
            Err(BranchError::SplitEigenvalues)
        );
    }

    #[test]
    fn split_widths() {
        let f = q();
        let r = m(&f, [["1", "0"], ["0", "-1"]]);
        let b = branch_split(&r, &place(&f, 2), 2).unwrap();
        assert!(matches!(
            b.shape,
            BranchShape::ApartmentTube { width: 1, .. }
        ));
        assert_eq!(b.stem.len(), 5);
        assert!(b.foliage.iter().all(|x| x.depth == 1));
        assert_eq!(b.foliage.len(), 5);
        let k = k5();
        let r = m(&k, [["1", "0"], ["0", "-1"]]);
        let two = place_by_name(&k, "P2").unwrap();
        let b = branch_split(&r, &two, 0).unwrap();
        assert!(matches!(
            b.shape,
            BranchShape::ApartmentTube { width: 2, .. }
        ));
        assert_eq!(b.side_branch(&b.stem[0]).len(), 4);
    }

    #[test]
    fn split_matches_bfs() {
        let f = q();
        let r = m(&f, [["1", "0"], ["0", "-1"]]);
        let pl = place(&f, 3);
        let b = branch_split(&r, &pl, 0).unwrap();
        assert!(matches!(
            b.shape,
            BranchShape::ApartmentTube { width: 0, .. }
        ));
        let tree = LocalTree::new(&pl);
        let cond = local_conductor(&tree, &r).unwrap();
        let is_stem = |v: &TreeVertex| Ok(tree.order_contains(v, &cond.s)?);
        let side = side_branch_bfs(&tree, &[r], &is_stem, &tree.root(), 100).unwrap();
        assert_eq!(side.len(), 1);
    }

    #[test]
    fn unramified_examples() {
        let f = q();
        let c3 = m(&f, [["0", "-1"], ["1", "-1"]]);
        let b = branch_unramified(&c3, &place(&f, 2)).unwrap();
        assert_eq!(
            b.shape,
            BranchShape::SingleVertexBall {
                center: LocalTree::new(&place(&f, 2)).root(),
                radius: 0
            }
        );
        let i = m(&f, [["0", "-1"], ["1", "0"]]);
        let b = branch_unramified(&i, &place(&f, 7)).unwrap();
        assert!(matches!(
            b.shape,
            BranchShape::SingleVertexBall { radius: 0, .. }
        ));
        // K(i)/K is ramified above 2 whenever 2 is unramified in K, so the
        // dyadic unramified case needs a field ramified at 2.
        let k = BaseField::from_d(3).unwrap();
        let two = place(&k, 2);
        let i = m(&k, [["0", "-1"], ["1", "0"]]);
        assert_eq!(
            local_extension(&two, &k.int(-1)).unwrap(),
            LocalExtension::Unramified
        );
        let b = branch_unramified(&i, &two).unwrap();
        assert!(matches!(
            b.shape,
            BranchShape::SingleVertexBall { radius: 2, .. }
        ));
        let bfs = branch_bfs(&[i], &two, &[LocalTree::new(&two).root()]).unwrap();
        assert_eq!(bfs.vertices(), b.vertices());
        assert_eq!(b.len(), 10);
        let inert = BaseField::from_d(-3).unwrap();
        assert_eq!(
            local_extension(&place(&inert, 2), &inert.int(-1)).unwrap(),
            LocalExtension::Ramified
        );
    }

    #[test]
    fn four_fold_rotation_over_k5() {
        let k = k5();
        let two = place_by_name(&k, "P2").unwrap();
        let r = m(&k, [["0", "-1"], ["1", "0"]]);
        let b = branch_closed_form(&r, &two, 0).unwrap();
        assert!(matches!(
            b.shape,
            BranchShape::SingleVertexBall { radius: 2, .. }
        ));
        assert_eq!(b.len(), 10);
        let bfs = branch_bfs(&[r], &two, &[LocalTree::new(&two).root()]).unwrap();
        assert_eq!(bfs.vertices(), b.vertices());
        assert_eq!(bfs.shape, b.shape);
    }

    #[test]
    fn ramified_examples() {
        let f = q();
        let two = place(&f, 2);
        let tree = LocalTree::new(&two);
        let r = m(&f, [["0", "-1"], ["1", "0"]]);
        let b = branch_ramified(&r, &two).unwrap();
        let u = tree.root();
        let w = tree.vertex(&f.int(1), 1).unwrap();
        let mut expect = [u, w];
        expect.sort();
        assert_eq!(
            b.shape,
            BranchShape::EdgeBall {
                centers: expect,
                radius: 0
            }
        );
        // det = 2 has odd valuation: no vertex is fixed.
        let odd = m(&f, [["0", "-2"], ["1", "0"]]);
        assert_eq!(
            branch_ramified(&odd, &two).unwrap().shape,
            BranchShape::Empty
        );
        // A larger ball: 1 + 2i has eigenvalue ratio ≡ 1 deeper.
        let r = m(&f, [["1", "-4"], ["4", "1"]]);
        let b = branch_ramified(&r, &two).unwrap();
        let bfs = branch_bfs(&[r], &two, &[tree.root()]).unwrap();
        assert_eq!(bfs.vertices(), b.vertices());
    }

    #[test]
    fn exceptional_places_examples() {
        let f = q();
        let r = m(&f, [["0", "-1"], ["1", "-1"]]);
        let s = m(&f, [["0", "1"], ["1", "0"]]);
        let ex = exceptional_places(&[r.clone(), s.clone()], &f).unwrap();
        assert_eq!(ex.iter().map(|p| p.p).collect::<Vec<_>>(), vec![3]);
        let b = branch_bfs(&[r, s], &ex[0], &[LocalTree::new(&ex[0]).root()]).unwrap();
        assert_eq!(b.len(), 2);
        let gi = BaseField::from_d(-1).unwrap();
        let i = m(&gi, [["0", "1"], ["-1", "0"]]);
        let j = m(&gi, [["sqrt(-1)", "0"], ["0", "-sqrt(-1)"]]);
        let ex = exceptional_places(&[i.clone(), j.clone()], &gi).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].p, 2);
        let b = branch_bfs(&[i, j], &ex[0], &[LocalTree::new(&ex[0]).root()]).unwrap();
        assert_eq!(b.len(), 4);
        assert!(matches!(
            b.shape,
            BranchShape::SingleVertexBall { radius: 1, .. }
        ));
        let c = m(&f, [["0", "-1"], ["1", "0"]]);
        assert!(matches!(
            exceptional_places(&[c], &f),
            Err(BranchError::NotIrreducible(_))
        ));
    }

    #[test]
    fn dihedral_four_over_k5() {
        let k = k5();
        let two = place_by_name(&k, "P2").unwrap();
        let a = m(&k, [["0", "1"], ["-1", "0"]]);
        let b = m(&k, [["0", "1"], ["1", "0"]]);
        let ex = exceptional_places(&[a.clone(), b.clone()], &k).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0], two);
        let rep = branch_bfs(&[a, b], &two, &[LocalTree::new(&two).root()]).unwrap();
        assert_eq!(rep.len(), 4);
    }

    #[test]
    fn product_of_side_branches() {
        let k = k5();
        let two = place_by_name(&k, "P2").unwrap();
        let r = m(&k, [["1", "0"], ["0", "-1"]]);
        let b = branch_split(&r, &two, 0).unwrap();
        let tree = LocalTree::new(&two);
        let side = b.side_branch(&tree.root());
        let prod = side_branch_product(&k, vec![(two.clone(), side)], &[tree.root()]).unwrap();
        assert_eq!(prod.size(), 4);
        let g = ideals::class_group(&k).unwrap();
        let trivial: Vec<_> = prod
            .tuples()
            .into_iter()
            .filter(|t| prod.artin_trivial(t, &g))
            .collect();
        assert_eq!(trivial.len(), 3);
        let empty = side_branch_product(&k, vec![], &[]).unwrap();
        assert_eq!(empty.tuples(), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn dot_output() {
        let f = q();
        let two = place(&f, 2);
        let r = m(&f, [["0", "-1"], ["1", "0"]]);
        let b = branch_ramified(&r, &two).unwrap();
        let dot = b.to_dot(&LocalTree::new(&two));
        assert!(dot.starts_with("digraph branch {"));
        assert_eq!(dot.matches(" -> ").count(), 1);
    }
}
