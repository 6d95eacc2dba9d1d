//! Property checks shared by the core test suites and the acceptance
//! target. Each check returns a one-line summary or the first failure.
#![allow(dead_code)]

use std::collections::BTreeSet;

use btt_core::arith::{factorize, hnf_rows, is_prime};
use btt_core::branch::{branch_bfs, branch_closed_form, BranchError, BranchReport};
use btt_core::ideals::{class_group, factor_rational_prime};
use btt_core::localtree::{LocalTree, ProjPoint, TreeVertex};
use btt_core::matrix::Matrix2;
use btt_core::numfield::{BaseField, NfElement};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub fn tree(d: i64, p: u64, idx: usize) -> LocalTree {
    let f = BaseField::from_d(d).unwrap();
    LocalTree::new(&factor_rational_prime(p, &f).unwrap()[idx])
}

/// a + b·ω in the ring of integers.
pub fn elt(f: &BaseField, a: i64, b: i64) -> NfElement {
    match f.quadratic() {
        Some(q) => &f.int(a) + &(&f.int(b) * &q.omega()),
        None => f.int(a),
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Places exercised by the random checks.
pub const PLACES: [(i64, u64, usize); 5] =
    [(-5, 2, 0), (-1, 2, 0), (1, 3, 0), (-3, 2, 0), (-5, 3, 1)];

pub fn matrix_strategy() -> impl Strategy<Value = [[(i64, i64); 2]; 2]> {
    let e = (-4i64..=4, -3i64..=3);
    [[e.clone(), e.clone()], [e.clone(), e]]
}

pub fn build(f: &BaseField, m: &[[(i64, i64); 2]; 2]) -> Matrix2 {
    Matrix2::new(
        elt(f, m[0][0].0, m[0][0].1),
        elt(f, m[0][1].0, m[0][1].1),
        elt(f, m[1][0].0, m[1][0].1),
        elt(f, m[1][1].0, m[1][1].1),
    )
}

/// Vertices of the ball of radius 4 fixed by diag(1, χ₀) against the tube
/// of radius min(ν(1 − χ₀), 4) around the standard apartment, for χ₀ = −1,
/// i and ζ₃ at several places of each field.
pub fn fixed_vertex_tubes() -> Result<String, String> {
    let mut cases: Vec<(LocalTree, NfElement)> = Vec::new();
    for (d, p, idx) in [
        (1, 2, 0),
        (1, 3, 0),
        (-5, 2, 0),
        (-5, 3, 0),
        (-5, 3, 1),
        (-1, 2, 0),
        (-3, 2, 0),
    ] {
        let t = tree(d, p, idx);
        let m1 = t.field.int(-1);
        cases.push((t, m1));
    }
    for (p, idx) in [(2, 0), (5, 0), (5, 1), (3, 0)] {
        cases.push((tree(-1, p, idx), NfElement::sqrt_d(-1)));
    }
    let k3 = BaseField::from_d(-3).unwrap();
    let zeta3 = &k3.quadratic().unwrap().omega() - &k3.int(1);
    if &(&zeta3 * &zeta3) * &zeta3 != k3.int(1) {
        return Err("ω − 1 is not a cube root of unity".into());
    }
    for (p, idx) in [(3, 0), (2, 0), (7, 0), (7, 1)] {
        cases.push((tree(-3, p, idx), zeta3.clone()));
    }
    let mut checked = 0;
    for (t, chi) in &cases {
        let f = &t.field;
        let g = Matrix2::diag(&f.int(1), chi);
        let width = t.val(&(&f.int(1) - chi)).unwrap().min(4);
        let zero = ProjPoint::Finite(f.int(0));
        let mut fixed = 0;
        for v in t.ball(&t.root(), 4).map_err(|e| e.to_string())? {
            let by_action = t.moebius_apply(&g, &v).map_err(|e| e.to_string())? == v;
            let by_order = t.order_contains(&v, &g).map_err(|e| e.to_string())?;
            let in_tube = t
                .distance_to_path(&v, &zero, &ProjPoint::Infinity)
                .map_err(|e| e.to_string())?
                <= width;
            if by_action != by_order || by_action != in_tube {
                return Err(format!("χ₀ = {chi} at {}: {v} fixed {by_action}, contains {by_order}, in tube {in_tube}", t.place.name()));
            }
            fixed += usize::from(by_action);
            checked += 1;
        }
        if fixed == 0 {
            return Err(format!(
                "no fixed vertex for χ₀ = {chi} at {}",
                t.place.name()
            ));
        }
    }
    Ok(format!(
        "{} (χ₀, place) pairs, {checked} vertices",
        cases.len()
    ))
}

/// The incenter action against the action on maximal orders for random
/// matrices and vertices.
pub fn moebius_agreement(cases: u32) -> Result<String, String> {
    let strategy = (
        0usize..PLACES.len(),
        matrix_strategy(),
        (-6i64..=6, -3i64..=3),
        -2i64..=4,
    );
    runner(cases)
        .run(&strategy, |(which, m, center, level)| {
            let (d, p, idx) = PLACES[which];
            let t = tree(d, p, idx);
            let f = t.field.clone();
            let g = build(&f, &m);
            prop_assume!(!g.det().is_zero());
            let v = t.vertex(&elt(&f, center.0, center.1), level).unwrap();
            let w = t.moebius_apply(&g, &v).unwrap();
            prop_assert_eq!(&w, &t.moebius_apply_by_orders(&g, &v).unwrap());
            // The action is an isometry.
            let root_image = t.moebius_apply(&g, &t.root()).unwrap();
            prop_assert_eq!(t.distance(&root_image, &w), t.distance(&t.root(), &v));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{cases} random (g, v)"))
}

/// Checks a report against an oracle predicate: listed vertices satisfy it,
/// no neighbor outside a finite branch does, and inside a ball around the
/// root the report agrees with brute force.
pub fn check_maximality(
    t: &LocalTree,
    report: &BranchReport,
    radius: i64,
    member: impl Fn(&TreeVertex) -> bool,
) -> Result<(), TestCaseError> {
    let listed: BTreeSet<TreeVertex> = report.vertices().into_iter().collect();
    for v in &listed {
        prop_assert!(member(v), "{} listed but not in the branch", v);
        if !report.truncated {
            for w in t.neighbors(v).unwrap() {
                prop_assert!(
                    listed.contains(&w) || !member(&w),
                    "{} is a missed neighbor",
                    w
                );
            }
        }
    }
    for v in t.ball(&t.root(), radius).unwrap() {
        prop_assert_eq!(
            member(&v),
            listed.contains(&v),
            "brute force disagrees at {}",
            v
        );
    }
    Ok(())
}

pub fn contains_all<'a>(
    t: &'a LocalTree,
    gens: &'a [Matrix2],
) -> impl Fn(&TreeVertex) -> bool + 'a {
    move |v| gens.iter().all(|g| t.order_contains(v, g).unwrap())
}

/// Maximality of closed-form branches of random matrices, their agreement
/// with brute force near the root and with the exhaustive search, and
/// maximality of the searched branches of finite groups.
pub fn branch_maximality(cases: u32) -> Result<String, String> {
    runner(cases)
        .run(&(0usize..PLACES.len(), matrix_strategy()), |(which, m)| {
            let (d, p, idx) = PLACES[which];
            let t = tree(d, p, idx);
            let f = t.field.clone();
            let r = build(&f, &m);
            let det = r.det();
            prop_assume!(!det.is_zero() && !r.is_scalar());
            let disc = &(&r.trace() * &r.trace()) - &(&det * &f.int(4));
            prop_assume!(!disc.is_zero() && t.val(&disc).unwrap() <= 8);
            let radius = 3;
            // Closed forms describe the vertices fixed by r; for a unit
            // determinant these are the vertices whose orders contain r.
            let fixed = |v: &TreeVertex| t.moebius_apply(&r, v).unwrap() == *v;
            let unit_det = t.val(&det) == Some(0);
            match branch_closed_form(&r, &t.place, radius + 1) {
                Ok(report) => {
                    check_maximality(&t, &report, radius, fixed)?;
                    if unit_det {
                        check_maximality(
                            &t,
                            &report,
                            radius,
                            contains_all(&t, std::slice::from_ref(&r)),
                        )?;
                        if !report.truncated && !report.stem.is_empty() {
                            let bfs = branch_bfs(std::slice::from_ref(&r), &t.place, &report.stem)
                                .unwrap();
                            prop_assert_eq!(bfs.vertices(), report.vertices());
                        }
                    }
                }
                // Hyperbolic elements fix no vertex.
                Err(BranchError::UnequalValuations) => {
                    for v in t.ball(&t.root(), radius).unwrap() {
                        prop_assert!(!fixed(&v));
                    }
                }
                // Locally split with fixed points outside K: the closed form
                // needs global fixed points.
                Err(BranchError::EigenvaluesNotInField) => prop_assert!(disc.sqrt().is_none()),
                Err(e) => prop_assert!(false, "{}", e),
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let groups = [
        (-5, 2, 0, vec![[[0, 1], [-1, 0]], [[0, 1], [1, 0]]]),
        (1, 2, 0, vec![[[0, 1], [-1, 0]], [[1, 0], [0, -1]]]),
        (1, 3, 0, vec![[[0, 1], [-1, -1]], [[0, 1], [1, 0]]]),
    ];
    let mut searched = 0;
    for (d, p, idx, gens) in groups {
        let t = tree(d, p, idx);
        let gens: Vec<Matrix2> = gens
            .iter()
            .map(|m| Matrix2::from_ints(&t.field, *m))
            .collect();
        let report = branch_bfs(&gens, &t.place, &[t.root()]).map_err(|e| e.to_string())?;
        check_maximality(&t, &report, 4, contains_all(&t, &gens)).map_err(|e| e.to_string())?;
        searched += 1;
    }
    let f = BaseField::from_d(-1).unwrap();
    let i = NfElement::sqrt_d(-1);
    let t = tree(-1, 2, 0);
    let gens = [
        Matrix2::diag(&i, &-&i),
        Matrix2::from_ints(&f, [[0, 1], [-1, 0]]),
    ];
    let report = branch_bfs(&gens, &t.place, &[t.root()]).map_err(|e| e.to_string())?;
    check_maximality(&t, &report, 4, contains_all(&t, &gens)).map_err(|e| e.to_string())?;
    if report.len() != 4 {
        return Err(format!(
            "quaternion branch at (1+i) has {} vertices",
            report.len()
        ));
    }
    Ok(format!(
        "{cases} random matrices, {} group branches",
        searched + 1
    ))
}

fn squarefree(n: i64) -> bool {
    factorize(n.unsigned_abs()).iter().all(|&(_, e)| e == 1)
}

/// Field parameter d of each fundamental discriminant with 2 < |D| ≤ bound.
fn fields(bound: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for dd in -bound..=bound {
        if dd.abs() < 3 {
            continue;
        }
        if dd.rem_euclid(4) == 1 && squarefree(dd) {
            out.push((dd, dd));
        } else if dd % 4 == 0 {
            let m = dd / 4;
            if matches!(m.rem_euclid(4), 2 | 3) && squarefree(m) {
                out.push((dd, m));
            }
        }
    }
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Number of reduced primitive positive definite forms of discriminant D.
fn reduced_form_count(dd: i64) -> usize {
    let mut n = 0;
    let mut a = 1i64;
    while 3 * a * a <= -dd {
        for b in -a + 1..=a {
            let num = b * b - dd;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) || gcd(gcd(a, b), c) != 1 {
                continue;
            }
            n += 1;
        }
        a += 1;
    }
    n
}

fn val(mut n: i128, p: i128) -> i64 {
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

enum Kind {
    Inert,
    Ramified,
    Split(i128),
}

/// Relation-lattice class number, searching until it reaches `target` or
/// the search box is exhausted.
fn relation_class_number(dd: i64, d: i64, target: usize) -> usize {
    let (t, nw): (i128, i128) = if d.rem_euclid(4) == 1 {
        (1, ((1 - d) / 4) as i128)
    } else {
        (0, -d as i128)
    };
    // 2/π < 7/10 gives an upper bound for the imaginary Minkowski constant.
    let s = BigInt::from(dd.abs()).sqrt().to_i64().unwrap() + 1;
    let bound = if dd < 0 { s * 7 / 10 + 1 } else { s / 2 + 1 };
    let mut ideals: Vec<(i128, Kind)> = Vec::new();
    for p in 2..=bound {
        if !is_prime(p as u64) {
            continue;
        }
        let p = p as i128;
        let roots: Vec<i128> = (0..p)
            .filter(|r| (r * r - t * r + nw).rem_euclid(p) == 0)
            .collect();
        if dd as i128 % p == 0 {
            ideals.push((p, Kind::Ramified));
        } else if roots.len() == 2 {
            ideals.push((p, Kind::Split(roots[0])));
            ideals.push((p, Kind::Split(roots[1])));
        } else {
            ideals.push((p, Kind::Inert));
        }
    }
    let k = ideals.len();
    if k == 0 {
        return 1;
    }
    let primes: Vec<i128> = {
        let mut v: Vec<i128> = ideals.iter().map(|x| x.0).collect();
        v.dedup();
        v
    };
    let mut lattice: Vec<Vec<BigInt>> = Vec::new();
    let mut pending: Vec<Vec<BigInt>> = Vec::new();
    let det = |l: &Vec<Vec<BigInt>>| -> Option<BigInt> {
        (l.len() == k).then(|| {
            l.iter()
                .enumerate()
                .fold(BigInt::one(), |acc, (i, r)| acc * &r[i])
        })
    };
    let mut last = None;
    for r in 1..=80i128 {
        for x in -r..=r {
            for y in 0..=r {
                if x.abs().max(y) != r || (y == 0 && x <= 0) {
                    continue;
                }
                let norm = x * x + t * x * y + nw * y * y;
                let mut rest = norm.abs();
                for &p in &primes {
                    while rest % p == 0 {
                        rest /= p;
                    }
                }
                if rest != 1 {
                    continue;
                }
                let row: Vec<BigInt> = ideals
                    .iter()
                    .map(|(p, kind)| {
                        let vx = if x == 0 { i64::MAX } else { val(x, *p) };
                        let kk = vx.min(if y == 0 { i64::MAX } else { val(y, *p) });
                        let pk = p.pow(kk as u32);
                        let (xp, yp) = (x / pk, y / pk);
                        let vn = val(xp * xp + t * xp * yp + nw * yp * yp, *p);
                        BigInt::from(match kind {
                            Kind::Inert => kk,
                            Kind::Ramified => 2 * kk + vn,
                            Kind::Split(root) => {
                                kk + if (xp + yp * root).rem_euclid(*p) == 0 {
                                    vn
                                } else {
                                    0
                                }
                            }
                        })
                    })
                    .collect();
                pending.push(row);
            }
        }
        if !pending.is_empty() {
            lattice.append(&mut pending);
            lattice = hnf_rows(&lattice, k);
            last = det(&lattice);
            if last.as_ref().and_then(|d| d.to_usize()) == Some(target) {
                return target;
            }
        }
    }
    last.and_then(|d| d.to_usize()).unwrap_or(0)
}

/// Class numbers of all fields with fundamental discriminant 2 < |D| ≤
/// `bound` against the reduced-form count (imaginary fields) and the
/// relation lattice (all fields).
pub fn class_numbers_vs_oracles(bound: i64) -> Result<String, String> {
    let mut checked = 0;
    for (dd, d) in fields(bound) {
        let f = BaseField::from_d(d).map_err(|e| e.to_string())?;
        let h = class_group(&f).map_err(|e| e.to_string())?.order();
        if dd < 0 && h != reduced_form_count(dd) {
            return Err(format!("reduced form count differs for D = {dd}"));
        }
        if relation_class_number(dd, d, h) != h {
            return Err(format!("relation lattice differs for D = {dd}"));
        }
        checked += 1;
    }
    Ok(format!("{checked} fields with |D| ≤ {bound}"))
}
