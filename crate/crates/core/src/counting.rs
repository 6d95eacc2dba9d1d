//! Counting conjugacy classes of integral representations: decomposable
//! representations through unit orbits on side branches, indecomposable
//! abelian ones through lattice classes of the quadratic order and the
//! selectivity filter, absolutely irreducible ones through Artin-trivial
//! vertex tuples, and the dihedral closed form.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::ToPrimitive;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith;
use crate::branch::{
    self, branch_bfs, exceptional_places, local_conductor, side_branch_bfs, side_branch_product,
    BranchError, SideBranchProduct,
};
use crate::config::{ConfigError, QuarticConfig, RelElement};
use crate::ideals::{self, class_group, factor_rational_prime, FracIdeal, IdealError, PrimePlace};
use crate::localtree::{LocalTree, TreeError, TreeVertex};
use crate::matrix::Matrix2;
use crate::numfield::{self, BaseField, FieldTag, NfElement, NumfieldError};

/// Bound on |exponent| of fundamental units enumerated for μ-invariants.
pub const UNIT_EXPONENT_BOUND: i64 = 24;
/// Bound on the rational primes searched for a prime in a given class.
pub const ARTIN_PRIME_BOUND: u64 = 5000;

#[derive(Debug, Error)]
pub enum CountError {
    #[error("relator {0} is not satisfied by the generator matrices")]
    RelatorViolated(usize),
    #[error("the generator matrices do not define a faithful representation (image of order {0}, expected {1})")]
    NotFaithful(usize, usize),
    #[error("{0}")]
    Classification(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("character of order {0} is not defined over {1}")]
    NotDefined(u32, String),
    #[error("missing configured data for {0}")]
    MissingConfig(String),
    #[error("internal bookkeeping mismatch: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Numfield(#[from] NumfieldError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A word in the generators: (generator index, exponent) pairs.
pub type Word = Vec<(usize, i64)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    Cyclic {
        n: u32,
        k: u32,
    },
    Dihedral {
        n: u32,
        k: u32,
    },
    Quaternion8,
    Presentation {
        generators: usize,
        relators: Vec<Word>,
        order: Option<usize>,
    },
}

impl GroupSpec {
    pub fn generators(&self) -> usize {
        match self {
            GroupSpec::Cyclic { .. } => 1,
            GroupSpec::Dihedral { .. } | GroupSpec::Quaternion8 => 2,
            GroupSpec::Presentation { generators, .. } => *generators,
        }
    }

    pub fn relators(&self) -> Vec<Word> {
        match self {
            GroupSpec::Cyclic { n, .. } => vec![vec![(0, *n as i64)]],
            GroupSpec::Dihedral { n, .. } => vec![
                vec![(0, *n as i64)],
                vec![(1, 2)],
                vec![(0, 1), (1, 1), (0, 1), (1, 1)],
            ],
            GroupSpec::Quaternion8 => vec![
                vec![(0, 4)],
                vec![(0, 2), (1, -2)],
                vec![(0, 1), (1, 1), (0, -3), (1, -1)],
            ],
            GroupSpec::Presentation { relators, .. } => relators.clone(),
        }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            GroupSpec::Cyclic { n, .. } => Some(*n as usize),
            GroupSpec::Dihedral { n, .. } => Some(2 * *n as usize),
            GroupSpec::Quaternion8 => Some(8),
            GroupSpec::Presentation { order, .. } => *order,
        }
    }

    pub fn name(&self) -> String {
        match self {
            GroupSpec::Cyclic { n, .. } => format!("C{n}"),
            GroupSpec::Dihedral { n, .. } => format!("D{n}"),
            GroupSpec::Quaternion8 => "Q8".into(),
            GroupSpec::Presentation { generators, .. } => format!("<{generators} generators>"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Decomposable,
    IndecomposableAbelian,
    AbsolutelyIrreducible,
}

/// A representation of a finite group given by generator images.
#[derive(Clone, Debug)]
pub struct RepSpec {
    pub group: GroupSpec,
    pub field: BaseField,
    pub gens: Vec<Matrix2>,
}

/// Evaluates a word in the generator matrices.
pub fn eval_word(gens: &[Matrix2], word: &[(usize, i64)]) -> Result<Matrix2, NumfieldError> {
    let f = gens[0].a.field();
    let mut acc = Matrix2::scalar(&NfElement::one(f));
    for &(i, e) in word {
        acc = acc.mul(&gens[i].pow(e)?);
    }
    Ok(acc)
}

/// Index of the first relator that does not evaluate to the identity.
pub fn first_failing_relator(gens: &[Matrix2], relators: &[Word]) -> Option<usize> {
    relators
        .iter()
        .position(|w| !eval_word(gens, w).map(|m| m.is_identity()).unwrap_or(false))
}

impl RepSpec {
    /// Validates relators and faithfulness.
    pub fn new(group: GroupSpec, field: BaseField, gens: Vec<Matrix2>) -> Result<Self, CountError> {
        if gens.len() != group.generators() {
            return Err(CountError::Classification(format!(
                "{} generator matrices given, {} expected",
                gens.len(),
                group.generators()
            )));
        }
        let gens: Vec<Matrix2> = gens
            .iter()
            .map(|g| g.lift(&field))
            .collect::<Result<_, _>>()?;
        if gens.iter().any(|g| g.det().is_zero()) {
            return Err(CountError::Classification("singular generator".into()));
        }
        if let Some(i) = first_failing_relator(&gens, &group.relators()) {
            return Err(CountError::RelatorViolated(i));
        }
        if let Some(n) = group.order() {
            let image = branch::group_closure(&gens)?.len();
            if image != n {
                return Err(CountError::NotFaithful(image, n));
            }
        }
        Ok(RepSpec { group, field, gens })
    }

    /// The standard generator matrices of a group over a field: diag(1, χ₀)
    /// or the companion matrix of ζ_n for cyclic groups, (R, S) for
    /// dihedral groups and the monomial pair for the quaternion group.
    pub fn standard(group: GroupSpec, field: BaseField) -> Result<Self, CountError> {
        let f = &field;
        let gens = match &group {
            GroupSpec::Cyclic { n, k } => {
                if *n < 2 {
                    return Err(CountError::Unsupported("cyclic group of order 1".into()));
                }
                if let Some(chi) = root_of_unity(f, *n, *k) {
                    vec![Matrix2::diag(&f.int(1), &chi)]
                } else {
                    let rho = numfield::dihedral_rho(*n, *k)
                        .map_err(|e| CountError::Unsupported(format!("C{n}: {e}")))?;
                    if !f.contains(&rho) {
                        return Err(CountError::Unsupported(format!(
                            "ζ_{n} has degree > 2 over {f}"
                        )));
                    }
                    let rho = f.lift(&rho)?;
                    vec![Matrix2::new(f.int(0), f.int(-1), f.int(1), rho)]
                }
            }
            GroupSpec::Dihedral { n, k } => {
                let rho = numfield::dihedral_rho(*n, *k)
                    .map_err(|e| CountError::Unsupported(format!("D{n}: {e}")))?;
                if !f.contains(&rho) {
                    return Err(CountError::Unsupported(format!(
                        "2cos(2π{k}/{n}) is not in {f}"
                    )));
                }
                let rho = f.lift(&rho)?;
                vec![
                    Matrix2::new(f.int(0), f.int(-1), f.int(1), rho),
                    Matrix2::from_ints(f, [[0, 1], [1, 0]]),
                ]
            }
            GroupSpec::Quaternion8 => {
                if f.quadratic().map(|q| q.d) != Some(-1) {
                    return Err(CountError::Unsupported(
                        "the standard quaternion matrices need Q(i)".into(),
                    ));
                }
                let i = NfElement::sqrt_d(-1);
                vec![
                    Matrix2::from_ints(f, [[0, 1], [-1, 0]]),
                    Matrix2::diag(&i, &-&i),
                ]
            }
            GroupSpec::Presentation { .. } => {
                return Err(CountError::Unsupported(
                    "presentations require explicit generator matrices".into(),
                ))
            }
        };
        RepSpec::new(group, field, gens)
    }
}

/// ζ^k for the primitive n-th root of unity ζ of the torsion generator's
/// group, when K contains one.
pub fn root_of_unity(field: &BaseField, n: u32, k: u32) -> Option<NfElement> {
    let units = field.torsion_units();
    let w = units.len() as u32;
    if !w.is_multiple_of(n) || (k as i64).gcd_i64(n as i64) != 1 {
        return None;
    }
    let (g, _) = match field {
        BaseField::Rational => (field.int(-1), 2),
        BaseField::Quadratic(q) => q.torsion_generator(),
    };
    g.pow(((w / n) * k) as i64).ok()
}

trait GcdI64 {
    fn gcd_i64(self, o: i64) -> i64;
}

impl GcdI64 for i64 {
    fn gcd_i64(self, o: i64) -> i64 {
        num_integer::Integer::gcd(&self, &o)
    }
}

fn disc(m: &Matrix2) -> NfElement {
    let t = m.trace();
    &(&t * &t) - &(&m.det() * &NfElement::from_int(m.a.field(), 4))
}

fn commute(x: &Matrix2, y: &Matrix2) -> bool {
    x.mul(y) == y.mul(x)
}

/// Rank over K of the K-span of a finite set of matrices.
fn span_rank(field: &BaseField, mats: &[Matrix2]) -> usize {
    let deg = field.degree();
    let mut rows = Vec::new();
    for m in mats {
        let den = m.denominator(field);
        let mi = m.scale(&field.rational(num_rational::BigRational::from_integer(den)));
        for beta in field.basis() {
            let row: Vec<num_bigint::BigInt> = mi
                .scale(&beta)
                .entries()
                .iter()
                .flat_map(|x| field.coords(x))
                .map(|c| c.to_integer())
                .collect();
            rows.push(row);
        }
    }
    arith::hnf_rows(&rows, 4 * deg).len() / deg
}

/// Classification with a short human-readable witness.
pub fn classify(rep: &RepSpec) -> Result<(Classification, String), CountError> {
    if let Some(i) = first_failing_relator(&rep.gens, &rep.group.relators()) {
        return Err(CountError::RelatorViolated(i));
    }
    let commutative = rep
        .gens
        .iter()
        .all(|x| rep.gens.iter().all(|y| commute(x, y)));
    if commutative {
        let key = rep.gens.iter().find(|g| !g.is_scalar());
        let Some(key) = key else {
            return Ok((Classification::Decomposable, "scalar image".into()));
        };
        let d = disc(key);
        if d.is_zero() {
            return Err(CountError::Classification(
                "non-semisimple generator".into(),
            ));
        }
        return Ok(match d.sqrt() {
            Some(_) => (
                Classification::Decomposable,
                format!("eigenvalues of {key} lie in {}", rep.field),
            ),
            None => (
                Classification::IndecomposableAbelian,
                format!(
                    "minimal polynomial x² − ({})x + ({}) of {key}",
                    key.trace(),
                    key.det()
                ),
            ),
        });
    }
    let group = branch::group_closure(&rep.gens)?;
    let rank = span_rank(&rep.field, &group);
    if rank == 4 {
        Ok((
            Classification::AbsolutelyIrreducible,
            format!("span of {} group elements has rank 4", group.len()),
        ))
    } else {
        Err(CountError::Classification(format!(
            "non-abelian image spanning rank {rank}"
        )))
    }
}

/// A count, concrete or a multiple of a class number of a quartic field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Count {
    Exact(u64),
    Symbolic {
        multiplier: u64,
        symbol: String,
        source: String,
        configured_value: Option<u64>,
    },
}

impl Count {
    pub fn exact(&self) -> Option<u64> {
        match self {
            Count::Exact(n) => Some(*n),
            Count::Symbolic { .. } => None,
        }
    }

    pub fn multiplier(&self) -> u64 {
        match self {
            Count::Exact(n) => *n,
            Count::Symbolic { multiplier, .. } => *multiplier,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Count::Exact(n) => json!(n),
            Count::Symbolic {
                multiplier,
                symbol,
                source,
                configured_value,
            } => {
                let mut v = json!({ "multiplier": multiplier, "symbol": symbol, "source": source });
                if let Some(c) = configured_value {
                    v["configured_value"] = json!(c * multiplier);
                }
                v
            }
        }
    }
}

/// One counted configuration: a vertex tuple over the exceptional places,
/// optionally paired with an ideal class, and its contribution.
#[derive(Clone, Debug)]
pub struct VertexRecord {
    pub places: Vec<PrimePlace>,
    pub tuple: Vec<TreeVertex>,
    /// Distance of each component to its anchor.
    pub depths: Vec<i64>,
    /// Class index in G_K paired with the tuple (decomposable case).
    pub class: Option<usize>,
    pub artin_trivial: bool,
    pub multiplicity: u64,
    /// Size of the unit orbit this tuple represents.
    pub orbit_size: usize,
}

impl VertexRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "places": self.places.iter().map(|p| p.name()).collect::<Vec<_>>(),
            "vertices": self.tuple.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "depths": self.depths,
            "class": self.class,
            "artin_trivial": self.artin_trivial,
            "multiplicity": self.multiplicity,
            "orbit_size": self.orbit_size,
        })
    }
}

/// Invariants of the abelian computation in the form of the
/// unit-orbit/μ formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianInvariants {
    pub selective: bool,
    /// μ for each exact distance vector, keyed by the exponents.
    pub mu: BTreeMap<Vec<i64>, usize>,
    /// Orbits of the enlarged group U on tuples at each distance vector.
    pub u_orbits: BTreeMap<Vec<i64>, usize>,
    /// Orbits of O_L^* on tuples at each distance vector.
    pub kernel_orbits: BTreeMap<Vec<i64>, usize>,
    /// Whether lattices at the distance vector can be free.
    pub admissible: BTreeMap<Vec<i64>, bool>,
    pub t: usize,
}

#[derive(Clone, Debug)]
pub struct CountReport {
    pub classification: Classification,
    pub theorem: String,
    pub count: Count,
    pub closed_form: Option<Count>,
    pub records: Vec<VertexRecord>,
    pub places: Vec<PrimePlace>,
    pub trace: Vec<String>,
    pub abelian: Option<AbelianInvariants>,
}

impl CountReport {
    /// Σ of multiplicities over Artin-trivial records.
    pub fn record_total(&self) -> u64 {
        self.records
            .iter()
            .filter(|r| r.artin_trivial)
            .map(|r| r.multiplicity)
            .sum()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "classification": self.classification,
            "theorem": self.theorem,
            "count": self.count.to_json(),
            "places": self.places.iter().map(|p| p.name()).collect::<Vec<_>>(),
            "vertices": self.records.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "per_vertex_multiplicity": self.records.iter().map(|r| if r.artin_trivial { r.multiplicity } else { 0 }).collect::<Vec<_>>(),
            "trace": self.trace,
        });
        if let Some(a) = &self.abelian {
            let keyed = |m: &BTreeMap<Vec<i64>, usize>| -> Value {
                m.iter()
                    .map(|(k, x)| (format!("{k:?}"), json!(x)))
                    .collect::<serde_json::Map<_, _>>()
                    .into()
            };
            v["abelian"] = json!({
                "selective": a.selective,
                "mu": keyed(&a.mu),
                "u_orbits": keyed(&a.u_orbits),
                "kernel_orbits": keyed(&a.kernel_orbits),
                "t": a.t,
            });
        }
        v
    }
}

/// h_K(2), the order of the 2-torsion of the class group.
pub fn h2(field: &BaseField) -> Result<u64, CountError> {
    Ok(class_group(field)?.two_torsion().len() as u64)
}

fn hk(field: &BaseField) -> Result<u64, CountError> {
    Ok(class_group(field)?.order() as u64)
}

/// Union-find orbit decomposition of {0..n} under the given permutations.
fn orbits(n: usize, perms: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for perm in perms {
        for (i, &j) in perm.iter().enumerate() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// The permutation of the product's tuples induced by a global matrix
/// acting on every component; the matrix must preserve each side branch.
fn tuple_permutation(
    prod: &SideBranchProduct,
    tuples: &[Vec<usize>],
    g: &Matrix2,
) -> Result<Vec<usize>, CountError> {
    let index: HashMap<&Vec<usize>, usize> =
        tuples.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut maps: Vec<HashMap<usize, usize>> = Vec::new();
    for f in &prod.factors {
        let tree = LocalTree::new(&f.place);
        let pos: HashMap<&TreeVertex, usize> = f
            .vertices
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v, i))
            .collect();
        let mut m = HashMap::new();
        for (i, (v, _)) in f.vertices.iter().enumerate() {
            let w = tree.moebius_apply(g, v)?;
            let j = *pos.get(&w).ok_or_else(|| {
                CountError::Inconsistent(format!("{g} moves {v} out of its side branch"))
            })?;
            m.insert(i, j);
        }
        maps.push(m);
    }
    tuples
        .iter()
        .map(|t| {
            let img: Vec<usize> = t.iter().zip(&maps).map(|(i, m)| m[i]).collect();
            index
                .get(&img)
                .copied()
                .ok_or_else(|| CountError::Inconsistent("tuple image outside the set".into()))
        })
        .collect()
}

/// Number of orbits of the coordinate-wise action z ↦ z/u of the given units
/// on the tuples of a decomposable side-branch product.
pub fn count_unit_orbits(
    prod: &SideBranchProduct,
    unit_gens: &[NfElement],
) -> Result<usize, CountError> {
    let tuples = prod.tuples();
    let one = prod.field.int(1);
    let mut perms = Vec::new();
    for u in unit_gens {
        let g = Matrix2::diag(&one, &prod.field.lift(u)?);
        perms.push(tuple_permutation(prod, &tuples, &g)?);
    }
    Ok(orbits(tuples.len(), &perms).len())
}

/// Multiplicative order of a root of unity (at most 12 in a quadratic field).
fn root_order(x: &NfElement) -> Option<u32> {
    let mut y = x.clone();
    for k in 1..=12u32 {
        if y.is_one() {
            return Some(k);
        }
        y = &y * x;
    }
    None
}

fn is_prime_power(n: u32) -> bool {
    arith::prime_power_base(n as u64).is_some()
}

/// Side branch of diag(1, χ₀) at the root: v_0^[0] and the v_a^[n] with
/// ν(a) = 0 and 1 ≤ n ≤ ν(1 − χ₀).
fn decomposable_product(
    field: &BaseField,
    chi: &NfElement,
) -> Result<SideBranchProduct, CountError> {
    let one = field.int(1);
    let r = Matrix2::diag(&one, chi);
    let places: Vec<PrimePlace> = FracIdeal::principal(field, &(&one - chi))?
        .factor()
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let mut branches = Vec::new();
    let mut base = Vec::new();
    for pl in places {
        let b = branch::branch_split(&r, &pl, 0)?;
        let tree = LocalTree::new(&pl);
        let root = tree.root();
        branches.push((pl, b.side_branch(&root)));
        base.push(root);
    }
    Ok(side_branch_product(field, branches, &base)?)
}

/// Count for diag(1, χ₀) with χ₀ of order `chi_order` in K.
pub fn count_decomposable(chi_order: u32, field: &BaseField) -> Result<CountReport, CountError> {
    if chi_order < 2 {
        return Err(CountError::Unsupported("trivial character".into()));
    }
    let g = class_group(field)?;
    let h = g.order() as u64;
    let h2v = g.two_torsion().len() as u64;
    let chi = root_of_unity(field, chi_order, 1);
    let prime_power = is_prime_power(chi_order);
    let Some(chi) = chi else {
        if prime_power {
            return Err(CountError::NotDefined(chi_order, field.to_string()));
        }
        // 1 − ζ is a unit: the branch is the bare apartment at every place.
        let records = class_records(field, &[], &[vec![]], &[vec![]], &[1])?;
        let report = CountReport {
            classification: Classification::Decomposable,
            theorem: "p63".into(),
            count: Count::Exact(h),
            closed_form: Some(Count::Exact(h)),
            records,
            places: vec![],
            trace: vec![format!(
                "χ of order {chi_order} (not a prime power): 1 − χ₀ is a unit, count = h_K = {h}"
            )],
            abelian: None,
        };
        return check_double_entry(report);
    };
    let prod = decomposable_product(field, &chi)?;
    let tuples = prod.tuples();
    let one = field.int(1);
    let mut perms = Vec::new();
    for u in field.unit_generators() {
        perms.push(tuple_permutation(&prod, &tuples, &Matrix2::diag(&one, &u))?);
    }
    let orbs = orbits(tuples.len(), &perms);
    let o = orbs.len() as u64;
    let reps: Vec<Vec<usize>> = orbs.iter().map(|o| tuples[o[0]].clone()).collect();
    let sizes: Vec<usize> = orbs.iter().map(|o| o.len()).collect();
    let tuple_vertices: Vec<Vec<TreeVertex>> = reps
        .iter()
        .map(|t| {
            t.iter()
                .zip(&prod.factors)
                .map(|(&i, f)| f.vertices[i].0.clone())
                .collect()
        })
        .collect();
    let depths: Vec<Vec<i64>> = reps
        .iter()
        .map(|t| {
            t.iter()
                .zip(&prod.factors)
                .map(|(&i, f)| f.vertices[i].1)
                .collect()
        })
        .collect();
    let places: Vec<PrimePlace> = prod.factors.iter().map(|f| f.place.clone()).collect();
    let records = class_records(field, &places, &tuple_vertices, &depths, &sizes)?;
    let defined_over_k = match field {
        BaseField::Rational => chi_order == 2,
        BaseField::Quadratic(q) => matches!((q.d, chi_order), (-1, 4) | (-3, 3) | (-3, 6)),
    };
    let (theorem, closed) = if !prime_power {
        ("p63", h)
    } else if defined_over_k {
        ("p64", 2 * h)
    } else {
        ("t5", o * h)
    };
    let mut trace = vec![
        format!("χ₀ = {chi} of order {chi_order}"),
        format!(
            "exceptional places: {}",
            places
                .iter()
                .map(|p| p.name())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        format!("unit orbits on the side-branch product: O = {o}"),
        format!("h_K = {h}, h_K(2) = {h2v}"),
    ];
    if theorem != "t5" {
        trace.push(format!("closed form {theorem}: {closed}"));
    }
    let report = CountReport {
        classification: Classification::Decomposable,
        theorem: theorem.into(),
        count: Count::Exact(o * h),
        closed_form: Some(Count::Exact(closed)),
        records,
        places,
        trace,
        abelian: None,
    };
    check_double_entry(report)
}

/// Records (class c, tuple) for every class of G_K: the tuple with
/// ideal-valued depth D contributes h_K(2) when c·[D] is a square.
fn class_records(
    field: &BaseField,
    places: &[PrimePlace],
    tuples: &[Vec<TreeVertex>],
    depths: &[Vec<i64>],
    sizes: &[usize],
) -> Result<Vec<VertexRecord>, CountError> {
    let g = class_group(field)?;
    let h2v = g.two_torsion().len() as u64;
    let mut out = Vec::new();
    for ((t, d), &size) in tuples.iter().zip(depths).zip(sizes) {
        let fac: Vec<(PrimePlace, i64)> = places.iter().cloned().zip(d.iter().copied()).collect();
        let dist = g.class_of(&FracIdeal::from_factors(field, &fac));
        for c in 0..g.order() {
            let ok = g.is_square(g.mul(c, dist));
            out.push(VertexRecord {
                places: places.to_vec(),
                tuple: t.clone(),
                depths: d.clone(),
                class: Some(c),
                artin_trivial: ok,
                multiplicity: if ok { h2v } else { 0 },
                orbit_size: size,
            });
        }
    }
    Ok(out)
}

fn check_double_entry(report: CountReport) -> Result<CountReport, CountError> {
    let total = report.record_total();
    if let Count::Exact(n) = report.count {
        if n != total {
            return Err(CountError::Inconsistent(format!(
                "count {n} but records sum to {total}"
            )));
        }
    }
    if let (Some(Count::Exact(c)), Count::Exact(n)) = (&report.closed_form, &report.count) {
        if c != n {
            return Err(CountError::Inconsistent(format!(
                "closed form {c} but enumeration gives {n}"
            )));
        }
    }
    Ok(report)
}

/// Whether L = K(√δ) lies in the (wide) Hilbert class field of K, in which
/// case the orders of L embed into maximal orders of only half the classes.
pub fn selectivity_check(field: &BaseField, delta: &NfElement) -> Result<bool, CountError> {
    if field.quadratic().is_none() {
        return Ok(false);
    }
    Ok(ideals::relative_quadratic_unramified(field, delta, false)?)
}

/// Whether the class of `ideal` lies in the kernel of the Artin map of the
/// unramified extension K(√δ)/K: a degree-one prime in the class splits.
pub fn artin_trivial_in_extension(
    field: &BaseField,
    delta: &NfElement,
    ideal: &FracIdeal,
) -> Result<bool, CountError> {
    let g = class_group(field)?;
    let target = g.class_of(ideal);
    if target == 0 {
        return Ok(true);
    }
    let delta = field.lift(delta)?;
    let n = field.norm(&delta);
    let bad = |p: u64| {
        let pb = num_bigint::BigInt::from(p);
        p == 2
            || (n.numer() % &pb).eq(&num_bigint::BigInt::from(0))
            || (n.denom() % &pb).eq(&num_bigint::BigInt::from(0))
    };
    for p in 3..ARTIN_PRIME_BOUND {
        if !arith::is_prime(p) || bad(p) {
            continue;
        }
        for pl in factor_rational_prime(p, field)? {
            if pl.residue_size != p || g.class_of(&pl.ideal) != target {
                continue;
            }
            let r = pl.residue_index(&delta)?;
            return Ok(arith::kronecker(&num_bigint::BigInt::from(r), p) == 1);
        }
    }
    Err(CountError::Unsupported(format!(
        "no degree-one prime below {ARTIN_PRIME_BOUND} in class {target}"
    )))
}

/// Data of one exceptional place of an abelian representation.
struct AbelianPlace {
    place: PrimePlace,
    /// Distance from v₀ to the stem.
    m0: i64,
}

/// The matrix of x + y√D acting through √D ↦ 2r₀ − τ.
fn rel_matrix(r0: &Matrix2, field: &BaseField, e: &RelElement) -> Result<Matrix2, CountError> {
    let id = Matrix2::identity(field);
    let sqrt_d = r0.scale(&field.int(2)).sub(&id.scale(&r0.trace()));
    Ok(id
        .scale(&field.lift(&e.x)?)
        .add(&sqrt_d.scale(&field.lift(&e.y)?)))
}

/// The places where O_K[ρ(G)] differs from the maximal order of L, with
/// the local conductor exponent of each.
fn abelian_places(
    field: &BaseField,
    gens: &[Matrix2],
) -> Result<Vec<(PrimePlace, i64)>, CountError> {
    let nonscalar: Vec<&Matrix2> = gens.iter().filter(|g| !g.is_scalar()).collect();
    let mut primes: BTreeSet<u64> = BTreeSet::new();
    for g in &nonscalar {
        let n = field.norm(&disc(g));
        for part in [n.numer(), n.denom()] {
            for (p, _) in arith::factorize_big(part) {
                primes.insert(p.to_u64().expect("prime fits in u64"));
            }
        }
    }
    let mut out = Vec::new();
    for p in primes {
        for pl in factor_rational_prime(p, field)? {
            let tree = LocalTree::new(&pl);
            let mut m = i64::MAX;
            for g in &nonscalar {
                m = m.min(local_conductor(&tree, g)?.k);
            }
            if m > 0 && m < i64::MAX {
                out.push((pl, m));
            }
        }
    }
    Ok(out)
}

/// Count of integral representations with image in the units of a
/// quadratic extension L/K: free O_K[ρ]-stable lattices modulo L^*.
pub fn count_indecomposable_abelian(
    rep: &RepSpec,
    config: &QuarticConfig,
) -> Result<CountReport, CountError> {
    let field = &rep.field;
    let (cls, _) = classify(rep)?;
    if cls != Classification::IndecomposableAbelian {
        return Err(CountError::Classification(format!(
            "expected an indecomposable abelian representation, got {cls:?}"
        )));
    }
    for g in &rep.gens {
        if !g.is_integral(field) {
            return Err(CountError::Branch(BranchError::NotIntegral(g.to_string())));
        }
    }
    let r0 = rep.gens.iter().find(|g| !g.is_scalar()).unwrap().clone();
    let delta = disc(&r0);
    let selective = selectivity_check(field, &delta)?;
    let pi_places = abelian_places(field, &rep.gens)?;
    let mut trace = vec![
        format!("L = K(√({delta})), generator {r0}"),
        format!("selective: {selective}"),
    ];

    // Side branches anchored at the stem vertex nearest v₀.
    let mut branches = Vec::new();
    let mut base = Vec::new();
    let mut aplaces = Vec::new();
    for (pl, m) in &pi_places {
        let tree = LocalTree::new(pl);
        let s = local_conductor(&tree, &r0)?.s;
        let is_stem =
            |v: &TreeVertex| -> Result<bool, BranchError> { Ok(tree.order_contains(v, &s)?) };
        let root = tree.root();
        let path = side_branch_bfs(&tree, &rep.gens, &|_| Ok(false), &root, 100_000)?;
        let (anchor, m0) = path
            .iter()
            .filter(|(v, _)| is_stem(v).unwrap_or(false))
            .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
            .cloned()
            .ok_or_else(|| {
                CountError::Inconsistent(format!("no stem vertex near v₀ at {}", pl.name()))
            })?;
        let side = side_branch_bfs(&tree, &rep.gens, &is_stem, &anchor, 100_000)?;
        let depth = side.iter().map(|x| x.1).max().unwrap_or(0);
        if depth != *m {
            return Err(CountError::Inconsistent(format!(
                "side branch depth {depth} but conductor exponent {m}"
            )));
        }
        trace.push(format!("{}: conductor exponent {m}, v₀ at distance {m0} from the stem, {} side-branch vertices", pl.name(), side.len()));
        branches.push((pl.clone(), side));
        base.push(root);
        aplaces.push(AbelianPlace {
            place: pl.clone(),
            m0,
        });
    }
    let prod = side_branch_product(field, branches, &base)?;
    let tuples = prod.tuples();

    // Units of L and capitulating elements, as relative elements over √δ.
    let quartic = match field {
        BaseField::Rational => None,
        BaseField::Quadratic(_) => config.resolve(field, &delta)?,
    };
    let (units, caps): (Vec<RelElement>, Vec<(FracIdeal, RelElement)>) = match (&quartic, field) {
        (Some(q), _) => (q.units.clone(), q.capitulation.clone()),
        (None, BaseField::Rational) => (rational_l_units(&delta)?, vec![]),
        (None, _) if tuples.len() <= 1 => (vec![], vec![]),
        (None, _) => {
            return Err(CountError::MissingConfig(format!(
                "units of {field}(√({delta}))"
            )))
        }
    };
    let unit_mats: Vec<Matrix2> = units
        .iter()
        .map(|u| rel_matrix(&r0, field, u))
        .collect::<Result<_, _>>()?;
    let cap_mats: Vec<Matrix2> = caps
        .iter()
        .map(|(_, l)| rel_matrix(&r0, field, l))
        .collect::<Result<_, _>>()?;
    let unit_perms: Vec<Vec<usize>> = unit_mats
        .iter()
        .map(|g| tuple_permutation(&prod, &tuples, g))
        .collect::<Result<_, _>>()?;
    let mut u_perms = unit_perms.clone();
    for g in &cap_mats {
        u_perms.push(tuple_permutation(&prod, &tuples, g)?);
    }
    let kernel_orbits = orbits(tuples.len(), &unit_perms);
    let u_orbits = orbits(tuples.len(), &u_perms);

    // Group orbits by their exact distance vector.
    let depth_of = |t: &Vec<usize>| -> Vec<i64> {
        t.iter()
            .zip(&prod.factors)
            .map(|(&i, f)| f.vertices[i].1)
            .collect()
    };
    let mut ker_count: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut u_count: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for o in &kernel_orbits {
        *ker_count.entry(depth_of(&tuples[o[0]])).or_default() += 1;
    }
    for o in &u_orbits {
        *u_count.entry(depth_of(&tuples[o[0]])).or_default() += 1;
    }
    let mut admissible: BTreeMap<Vec<i64>, bool> = BTreeMap::new();
    for d in ker_count.keys() {
        let ok = if selective {
            let fac: Vec<(PrimePlace, i64)> = aplaces
                .iter()
                .zip(d)
                .map(|(a, &x)| (a.place.clone(), x - a.m0))
                .collect();
            artin_trivial_in_extension(field, &delta, &FracIdeal::from_factors(field, &fac))?
        } else {
            true
        };
        admissible.insert(d.clone(), ok);
    }
    let multiplier: u64 = ker_count
        .iter()
        .filter(|(d, _)| admissible[*d])
        .map(|(_, &n)| n as u64)
        .sum();

    // The same total through U-orbits weighted by μ(1)/μ.
    let g = class_group(field)?;
    let ilk = branch::ideal_ilk(field, &delta)?;
    let mut mu = BTreeMap::new();
    for d in ker_count.keys() {
        let dist: Vec<(PrimePlace, i64)> = aplaces
            .iter()
            .zip(d)
            .map(|(a, &x)| (a.place.clone(), x))
            .collect();
        mu.insert(
            d.clone(),
            mu_invariants(field, &r0, &units, &caps, &dist, &ilk)?.0,
        );
    }
    let mu1 = mu_invariants(field, &r0, &units, &caps, &[], &ilk)?.0;
    let mut weighted = 0u64;
    for (d, &n) in &u_count {
        if !admissible[d] {
            continue;
        }
        let m = mu[d];
        if mu1 % m != 0 {
            return Err(CountError::Inconsistent(format!(
                "μ(1) = {mu1} not divisible by μ = {m}"
            )));
        }
        weighted += (n * (mu1 / m)) as u64;
    }
    let t = g.two_torsion().len() / mu1;
    trace.push(format!("O_L^*-orbits by distance: {ker_count:?}"));
    trace.push(format!(
        "U-orbits by distance: {u_count:?}; μ: {mu:?}; μ(1) = {mu1}; t = {t}"
    ));
    trace.push(format!("admissible distances: {admissible:?}"));
    trace.push(format!(
        "multiplier {multiplier}; U-orbit formula gives {weighted}"
    ));
    if weighted != multiplier {
        return Err(CountError::Inconsistent(format!(
            "lattice count {multiplier} but U-orbit formula {weighted}"
        )));
    }

    // Records: one per O_L^*-orbit.
    let places: Vec<PrimePlace> = aplaces.iter().map(|a| a.place.clone()).collect();
    let mut records = Vec::new();
    for o in &kernel_orbits {
        let t = &tuples[o[0]];
        let d = depth_of(t);
        let ok = admissible[&d];
        records.push(VertexRecord {
            places: places.clone(),
            tuple: t
                .iter()
                .zip(&prod.factors)
                .map(|(&i, f)| f.vertices[i].0.clone())
                .collect(),
            depths: d,
            class: None,
            artin_trivial: ok,
            multiplicity: u64::from(ok),
            orbit_size: o.len(),
        });
    }
    let (count, theorem) = match field {
        BaseField::Rational => {
            let l = l_field(&delta)?;
            let hl = hk(&l)?;
            trace.push(format!("h_L = h({l}) = {hl}"));
            for r in records.iter_mut() {
                r.multiplicity *= hl;
            }
            (Count::Exact(multiplier * hl), "p42")
        }
        BaseField::Quadratic(_) => {
            let (source, value) = match &quartic {
                Some(q) => (q.source.clone(), q.entry.relative_class_number),
                None => ("not configured".to_string(), None),
            };
            (
                Count::Symbolic {
                    multiplier,
                    symbol: "h_{L/K}".into(),
                    source,
                    configured_value: value,
                },
                "t6",
            )
        }
    };
    let report = CountReport {
        classification: Classification::IndecomposableAbelian,
        theorem: theorem.into(),
        count,
        closed_form: None,
        records,
        places,
        trace,
        abelian: Some(AbelianInvariants {
            selective,
            mu,
            u_orbits: u_count,
            kernel_orbits: ker_count,
            admissible,
            t,
        }),
    };
    if report.count.exact().is_some() {
        check_double_entry(report)
    } else if report.record_total() != multiplier {
        Err(CountError::Inconsistent(
            "records do not sum to the multiplier".into(),
        ))
    } else {
        Ok(report)
    }
}

/// L = Q(√δ) for δ ∈ Q.
fn l_field(delta: &NfElement) -> Result<BaseField, CountError> {
    let r = delta
        .as_rational()
        .ok_or_else(|| CountError::Unsupported("δ not rational".into()))?;
    let (sf, _) = arith::squarefree_part(&(r.numer() * r.denom()));
    Ok(BaseField::from_d(sf.to_i64().expect("small discriminant"))?)
}

/// Units of the imaginary quadratic field L = Q(√δ) written as x + y√δ.
fn rational_l_units(delta: &NfElement) -> Result<Vec<RelElement>, CountError> {
    let l = l_field(delta)?;
    let q = BaseField::Rational;
    let r = delta.as_rational().unwrap();
    let d = match &l {
        BaseField::Quadratic(k) => k.d,
        BaseField::Rational => return Err(CountError::Classification("δ is a square".into())),
    };
    // √δ = c √d with c² = δ/d.
    let c = arith::rat_sqrt(&(r / num_rational::BigRational::from_integer(d.into())))
        .ok_or_else(|| CountError::Inconsistent("δ/d is not a square".into()))?;
    l.unit_generators()
        .iter()
        .map(|u| {
            let (x, y) = match u.field() {
                FieldTag::Quadratic(_) => (u.coords()[0].clone(), u.coords()[1].clone()),
                _ => (
                    u.as_rational().unwrap(),
                    num_rational::BigRational::from_integer(0.into()),
                ),
            };
            Ok(RelElement {
                x: q.rational(x),
                y: q.rational(y / &c),
            })
        })
        .collect()
}

/// Orders of torsion units among the given relative elements, by powering.
fn rel_order(r0: &Matrix2, field: &BaseField, e: &RelElement) -> Result<Option<u32>, CountError> {
    let m = rel_matrix(r0, field, e)?;
    let mut p = m.clone();
    for k in 1..=12u32 {
        if p.is_identity() {
            return Ok(Some(k));
        }
        p = p.mul(&m);
    }
    Ok(None)
}

/// μ for the ideal Π P^{d_P} (empty for (1)): the order of the subgroup of
/// G_K(2) generated by the classes [J] of the elements λ of
/// U = ⟨O_L^*, λ_J⟩ with σ(λ)/λ ≡ 1 modulo Π P^{d_P} · I[L/K]. Also returns
/// the generating classes found.
pub fn mu_invariants(
    field: &BaseField,
    r0: &Matrix2,
    units: &[RelElement],
    caps: &[(FracIdeal, RelElement)],
    dist: &[(PrimePlace, i64)],
    ilk: &[(PrimePlace, i64)],
) -> Result<(usize, Vec<usize>), CountError> {
    let g = class_group(field)?;
    let id = Matrix2::identity(field);
    let mut checks: BTreeMap<PrimePlace, (i64, bool)> = BTreeMap::new();
    for (p, d) in dist {
        checks.insert(p.clone(), (*d, false));
    }
    for (p, _) in ilk {
        let e = checks.entry(p.clone()).or_insert((0, true));
        e.1 = true;
    }
    let kappas: BTreeMap<PrimePlace, i64> = ilk.iter().map(|(p, e)| (p.clone(), e - 1)).collect();
    let congruent = |m: &Matrix2| -> Result<bool, CountError> {
        // σ(λ)/λ = adj(M)²/det(M).
        let adj = m.adjugate();
        let s = adj.mul(&adj).scale(&m.det().inv()?);
        let s1 = s.sub(&id);
        if s1.is_scalar() && s1.a.is_zero() {
            return Ok(true);
        }
        let (tr, nm) = (s1.trace(), s1.det());
        for (p, (d, ram)) in &checks {
            let v = |x: &NfElement| p.val_or_inf(x).unwrap_or(i64::MAX);
            let ok = if *ram {
                v(&nm) > 2 * d + kappas[p]
            } else {
                v(&tr) >= *d && v(&nm) >= 2 * d
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    };
    // Exponent ranges: torsion units up to their order, others bounded.
    let mut ranges = Vec::new();
    let mut mats = Vec::new();
    for u in units {
        let m = rel_matrix(r0, field, u)?;
        let range: Vec<i64> = match rel_order(r0, field, u)? {
            Some(o) => (0..o as i64).collect(),
            None => (-UNIT_EXPONENT_BOUND..=UNIT_EXPONENT_BOUND).collect(),
        };
        ranges.push(range);
        mats.push(m);
    }
    for (_, l) in caps {
        ranges.push(vec![0, 1]);
        mats.push(rel_matrix(r0, field, l)?);
    }
    let cap_classes: Vec<usize> = caps.iter().map(|(j, _)| g.class_of(j)).collect();
    let mut found: BTreeSet<usize> = BTreeSet::from([0]);
    let mut idx = vec![0usize; ranges.len()];
    loop {
        let mut m = id.clone();
        for (k, &i) in idx.iter().enumerate() {
            m = m.mul(&mats[k].pow(ranges[k][i])?);
        }
        if congruent(&m)? {
            let mut c = 0;
            for (j, &cc) in cap_classes.iter().enumerate() {
                if ranges[units.len() + j][idx[units.len() + j]] == 1 {
                    c = g.mul(c, cc);
                }
            }
            found.insert(c);
        }
        // Next exponent vector.
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < ranges[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    // Subgroup generated by the found classes.
    let mut sub: BTreeSet<usize> = BTreeSet::from([0]);
    loop {
        let next: BTreeSet<usize> = sub
            .iter()
            .flat_map(|&a| found.iter().map(move |&b| (a, b)))
            .map(|(a, b)| g.mul(a, b))
            .collect();
        let merged: BTreeSet<usize> = sub.union(&next).copied().collect();
        if merged.len() == sub.len() {
            break;
        }
        sub = merged;
    }
    Ok((sub.len(), found.into_iter().collect()))
}

/// Number of conjugacy classes of representations per maximal order.
pub fn theta_multiplicity(
    field: &BaseField,
    classification: Classification,
    mu1: Option<usize>,
) -> Result<u64, CountError> {
    let h = h2(field)?;
    Ok(match (classification, mu1) {
        (Classification::IndecomposableAbelian, Some(m)) => h / m as u64,
        _ => h,
    })
}

/// Count for an absolutely irreducible integral representation:
/// h_K(2) times the number of vertex tuples of the branch product whose
/// ideal-valued distance to v₀ has a square class.
pub fn count_absolutely_irreducible(rep: &RepSpec) -> Result<CountReport, CountError> {
    let field = &rep.field;
    let (cls, witness) = classify(rep)?;
    if cls != Classification::AbsolutelyIrreducible {
        return Err(CountError::Classification(format!(
            "expected an absolutely irreducible representation, got {cls:?}"
        )));
    }
    let places = exceptional_places(&rep.gens, field)?;
    let g = class_group(field)?;
    let h2v = g.two_torsion().len() as u64;
    let mut branches = Vec::new();
    let mut base = Vec::new();
    let mut trace = vec![witness];
    for pl in &places {
        let tree = LocalTree::new(pl);
        let root = tree.root();
        let b = branch_bfs(&rep.gens, pl, std::slice::from_ref(&root))?;
        trace.push(format!("{}: branch of {} vertices", pl.name(), b.len()));
        let mut verts: Vec<(TreeVertex, i64)> = b
            .vertices()
            .into_iter()
            .map(|v| (tree.distance(&root, &v), v))
            .map(|(d, v)| (v, d))
            .collect();
        verts.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        branches.push((pl.clone(), verts));
        base.push(root);
    }
    let prod = side_branch_product(field, branches, &base)?;
    let mut records = Vec::new();
    for t in prod.tuples() {
        let ok = prod.artin_trivial(&t, &g);
        records.push(VertexRecord {
            places: places.clone(),
            tuple: t
                .iter()
                .zip(&prod.factors)
                .map(|(&i, f)| f.vertices[i].0.clone())
                .collect(),
            depths: t
                .iter()
                .zip(&prod.factors)
                .map(|(&i, f)| f.vertices[i].1)
                .collect(),
            class: None,
            artin_trivial: ok,
            multiplicity: if ok { h2v } else { 0 },
            orbit_size: 1,
        });
    }
    let trivial = records.iter().filter(|r| r.artin_trivial).count() as u64;
    trace.push(format!("{trivial} Artin-trivial tuples, h_K(2) = {h2v}"));
    check_double_entry(CountReport {
        classification: cls,
        theorem: "t7".into(),
        count: Count::Exact(trivial * h2v),
        closed_form: None,
        records,
        places,
        trace,
        abelian: None,
    })
}

/// Dihedral closed form over the field of definition K = Q(ζ + ζ^{−1}):
/// 2·h_K(2) when n is a prime power or twice one, h_K(2) otherwise,
/// cross-checked against the branch computation on (R, S).
pub fn count_dihedral(n: u32, k: u32) -> Result<CountReport, CountError> {
    let rho = numfield::dihedral_rho(n, k).map_err(|e| CountError::Unsupported(e.to_string()))?;
    let field = match rho.field() {
        FieldTag::Rational => BaseField::Rational,
        FieldTag::Quadratic(d) => BaseField::from_d(d)?,
        FieldTag::Cyclotomic(_) => {
            return Err(CountError::Unsupported(
                "cyclotomic field of definition".into(),
            ))
        }
    };
    let h2v = h2(&field)?;
    let special = is_prime_power(n) || (n.is_multiple_of(2) && is_prime_power(n / 2));
    let closed = if special { 2 * h2v } else { h2v };
    let rep = RepSpec::standard(GroupSpec::Dihedral { n, k }, field.clone())?;
    let mut report = count_absolutely_irreducible(&rep)?;
    if report.count != Count::Exact(closed) {
        return Err(CountError::Inconsistent(format!(
            "dihedral closed form {closed} but branch count {:?}",
            report.count
        )));
    }
    report.theorem = "t4".into();
    report.closed_form = Some(Count::Exact(closed));
    report.trace.push(format!(
        "n = {n}: {}prime power or twice one, closed form {closed}",
        if special { "" } else { "not a " }
    ));
    Ok(report)
}

/// The character ratio χ₀ generating χ(G) for a decomposable representation,
/// with its order.
pub fn decomposable_character(rep: &RepSpec) -> Result<(NfElement, u32), CountError> {
    let f = &rep.field;
    let Some(key) = rep.gens.iter().find(|g| !g.is_scalar()) else {
        return Err(CountError::Unsupported("scalar representation".into()));
    };
    let d = disc(key);
    let sq = d
        .sqrt()
        .ok_or_else(|| CountError::Classification("eigenvalues not in K".into()))?;
    let half = f.rational(num_rational::BigRational::new(1.into(), 2.into()));
    let (a, b) = (&(&key.trace() + &sq) * &half, &(&key.trace() - &sq) * &half);
    // Eigenbasis of the key generator diagonalizes all generators.
    let col = |lam: &NfElement| {
        let (x, y) = (key.b.clone(), lam - &key.a);
        if !x.is_zero() || !y.is_zero() {
            (x, y)
        } else {
            (lam - &key.d, key.c.clone())
        }
    };
    let (c1, c2) = (col(&a), col(&b));
    let p = Matrix2::from_columns((&c1.0, &c1.1), (&c2.0, &c2.1));
    let mut order = 1u32;
    for g in &rep.gens {
        let dg = g.conj_by(&p)?;
        let ratio = &dg.d / &dg.a;
        let o = root_order(&ratio)
            .ok_or_else(|| CountError::Unsupported("eigenvalue ratio of infinite order".into()))?;
        order = num_integer::Integer::lcm(&order, &o);
    }
    let chi =
        root_of_unity(f, order, 1).ok_or_else(|| CountError::NotDefined(order, f.to_string()))?;
    Ok((chi, order))
}

/// Dispatches on the classification.
pub fn count(rep: &RepSpec, config: &QuarticConfig) -> Result<CountReport, CountError> {
    let (cls, witness) = classify(rep)?;
    let mut report = match cls {
        Classification::Decomposable => {
            let (_, order) = decomposable_character(rep)?;
            count_decomposable(order, &rep.field)?
        }
        Classification::IndecomposableAbelian => count_indecomposable_abelian(rep, config)?,
        Classification::AbsolutelyIrreducible => count_absolutely_irreducible(rep)?,
    };
    report.trace.insert(
        0,
        format!("{} over {}: {witness}", rep.group.name(), rep.field),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(d: i64) -> BaseField {
        BaseField::from_d(d).unwrap()
    }

    #[test]
    fn decomposable_counts() {
        assert_eq!(
            count_decomposable(2, &k(-5)).unwrap().count,
            Count::Exact(8)
        );
        assert_eq!(
            count_decomposable(2, &BaseField::Rational).unwrap().count,
            Count::Exact(2)
        );
        assert_eq!(
            count_decomposable(2, &BaseField::Rational).unwrap().theorem,
            "p64"
        );
        assert_eq!(
            count_decomposable(6, &k(-5)).unwrap().count,
            Count::Exact(2)
        );
        assert_eq!(
            count_decomposable(4, &k(-1)).unwrap().count,
            Count::Exact(2)
        );
        assert_eq!(
            count_decomposable(3, &k(-3)).unwrap().count,
            Count::Exact(2)
        );
        assert_eq!(
            count_decomposable(6, &k(-3)).unwrap().count,
            Count::Exact(1)
        );
        assert!(matches!(
            count_decomposable(4, &k(-5)),
            Err(CountError::NotDefined(4, _))
        ));
        for n in [6, 10, 12] {
            assert_eq!(
                count_decomposable(n, &k(-14)).unwrap().count,
                Count::Exact(4)
            );
        }
    }

    #[test]
    fn unit_orbits_example() {
        let f = k(-5);
        let prod = decomposable_product(&f, &f.int(-1)).unwrap();
        assert_eq!(prod.size(), 4);
        assert_eq!(count_unit_orbits(&prod, &f.unit_generators()).unwrap(), 4);
        let q = BaseField::Rational;
        let prod = decomposable_product(&q, &q.int(-1)).unwrap();
        assert_eq!(count_unit_orbits(&prod, &q.unit_generators()).unwrap(), 2);
    }

    #[test]
    fn classification() {
        let q = BaseField::Rational;
        let c2 = RepSpec::standard(GroupSpec::Cyclic { n: 2, k: 1 }, q.clone()).unwrap();
        assert_eq!(classify(&c2).unwrap().0, Classification::Decomposable);
        let c4 = RepSpec::standard(GroupSpec::Cyclic { n: 4, k: 1 }, q.clone()).unwrap();
        assert_eq!(
            classify(&c4).unwrap().0,
            Classification::IndecomposableAbelian
        );
        let d5 = RepSpec::standard(GroupSpec::Dihedral { n: 3, k: 1 }, q.clone()).unwrap();
        assert_eq!(
            classify(&d5).unwrap().0,
            Classification::AbsolutelyIrreducible
        );
        let bad = RepSpec::new(
            GroupSpec::Cyclic { n: 3, k: 1 },
            q.clone(),
            vec![Matrix2::from_ints(&q, [[0, -1], [1, 0]])],
        );
        assert!(matches!(bad, Err(CountError::RelatorViolated(0))));
    }

    #[test]
    fn abelian_over_q() {
        let q = BaseField::Rational;
        let cfg = QuarticConfig::builtin();
        for n in [3, 4, 6] {
            let rep = RepSpec::standard(GroupSpec::Cyclic { n, k: 1 }, q.clone()).unwrap();
            let r = count_indecomposable_abelian(&rep, &cfg).unwrap();
            assert_eq!(r.count, Count::Exact(1), "C{n}");
            assert_eq!(r.theorem, "p42");
        }
    }

    #[test]
    fn selectivity() {
        assert!(selectivity_check(&k(-5), &k(-5).int(-1)).unwrap());
        assert!(!selectivity_check(&BaseField::Rational, &BaseField::Rational.int(-1)).unwrap());
        assert!(selectivity_check(&k(-15), &k(-15).int(-3)).unwrap());
        assert!(!selectivity_check(&k(-5), &k(-5).int(-3)).unwrap());
    }

    #[test]
    fn four_fold_rotation_over_k5() {
        let f = k(-5);
        let rep = RepSpec::standard(GroupSpec::Cyclic { n: 4, k: 1 }, f.clone()).unwrap();
        let r = count_indecomposable_abelian(&rep, &QuarticConfig::builtin()).unwrap();
        let a = r.abelian.clone().unwrap();
        assert!(a.selective);
        assert_eq!(r.count.multiplier(), 3);
        assert_eq!(a.mu[&vec![0]], 2);
        assert_eq!(a.mu[&vec![2]], 1);
        assert_eq!(a.t, 1);
        assert_eq!(a.kernel_orbits[&vec![0]], 1);
        assert_eq!(a.kernel_orbits[&vec![2]], 2);
        assert!(!a.admissible[&vec![1]]);
    }

    #[test]
    fn six_fold_rotation_over_k15() {
        let f = k(-15);
        let rep = RepSpec::new(
            GroupSpec::Cyclic { n: 6, k: 1 },
            f.clone(),
            vec![Matrix2::from_ints(&f, [[0, 1], [-1, 1]])],
        )
        .unwrap();
        let r = count_indecomposable_abelian(&rep, &QuarticConfig::builtin()).unwrap();
        let a = r.abelian.clone().unwrap();
        assert!(a.selective);
        assert!(!a.admissible[&vec![0]]);
        assert!(a.admissible[&vec![1]]);
        assert_eq!(r.count.multiplier(), 1);
    }

    #[test]
    fn irreducible_counts() {
        let gi = k(-1);
        let q8 = RepSpec::standard(GroupSpec::Quaternion8, gi).unwrap();
        assert_eq!(
            count_absolutely_irreducible(&q8).unwrap().count,
            Count::Exact(4)
        );
        let f = k(-5);
        let d4 = RepSpec::new(
            GroupSpec::Dihedral { n: 4, k: 1 },
            f.clone(),
            vec![
                Matrix2::from_ints(&f, [[0, 1], [-1, 0]]),
                Matrix2::from_ints(&f, [[0, 1], [1, 0]]),
            ],
        )
        .unwrap();
        let r = count_absolutely_irreducible(&d4).unwrap();
        assert_eq!(r.count, Count::Exact(6));
        assert_eq!(r.records.len(), 4);
        assert_eq!(r.records.iter().filter(|x| !x.artin_trivial).count(), 1);
    }

    #[test]
    fn dihedral_closed_forms() {
        for (n, expect) in [(3, 2), (4, 2), (5, 2), (6, 2), (8, 2), (10, 2), (12, 1)] {
            assert_eq!(
                count_dihedral(n, 1).unwrap().count,
                Count::Exact(expect),
                "n = {n}"
            );
        }
    }

    #[test]
    fn theta() {
        assert_eq!(
            theta_multiplicity(&k(-5), Classification::AbsolutelyIrreducible, None).unwrap(),
            2
        );
        assert_eq!(
            theta_multiplicity(&k(-5), Classification::IndecomposableAbelian, Some(2)).unwrap(),
            1
        );
        assert_eq!(
            theta_multiplicity(&BaseField::Rational, Classification::Decomposable, None).unwrap(),
            1
        );
    }
}
