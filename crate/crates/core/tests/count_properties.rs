//! Property suites for counting and synthesis: strong approximation
//! post-conditions, free bases of ideal pairs, and invariance of the counts.

use btt_core::counting::{
    count_absolutely_irreducible, count_decomposable, count_dihedral, Count, GroupSpec, RepSpec,
};
use btt_core::ideals::{factor_rational_prime, is_principal, FracIdeal, PrimePlace};
use btt_core::matrix::Matrix2;
use btt_core::numfield::{BaseField, NfElement};
use btt_core::synth::{free_basis_of_ideal_pair, sl2_approximate, ApproxTarget};
use num_traits::{One, Signed, ToPrimitive};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn elt(f: &BaseField, a: i64, b: i64) -> NfElement {
    match f.quadratic() {
        Some(q) => &f.int(a) + &(&f.int(b) * &q.omega()),
        None => f.int(a),
    }
}

fn upper(f: &BaseField, x: &NfElement) -> Matrix2 {
    Matrix2::new(f.int(1), x.clone(), f.int(0), f.int(1))
}

fn lower(f: &BaseField, x: &NfElement) -> Matrix2 {
    Matrix2::new(f.int(1), f.int(0), x.clone(), f.int(1))
}

/// Class numbers from the standard tables.
const CLASS_NUMBERS: [(i64, usize); 14] = [
    (-1, 1),
    (-2, 1),
    (-3, 1),
    (-5, 2),
    (-6, 2),
    (-14, 4),
    (-15, 2),
    (-21, 4),
    (-23, 3),
    (-26, 6),
    (2, 1),
    (3, 1),
    (10, 2),
    (15, 2),
];

fn rational_primes_of_denominator(f: &BaseField, x: &NfElement) -> Vec<u64> {
    let den = f
        .coords(x)
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, c| {
            num_integer::Integer::lcm(&acc, c.denom())
        });
    let mut n = den.abs().to_u64().unwrap();
    let mut out = vec![];
    let mut p = 2;
    while n > 1 {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    out
}

fn same_place(a: &PrimePlace, b: &PrimePlace) -> bool {
    a.ideal == b.ideal
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, rng_seed: RngSeed::Fixed(60), ..ProptestConfig::default() })]

    /// The approximant has determinant one, meets every target to the
    /// requested precision, and is integral at all other places.
    #[test]
    fn strong_approximation_post_conditions(
        d in prop::sample::select(vec![-5i64, -1, 1]),
        params in prop::collection::vec(((-3i64..=3, -2i64..=2), prop::sample::select(vec![1i64, 2, 3, 4, 6])), 3),
        second in prop::collection::vec(((-3i64..=3, -2i64..=2), prop::sample::select(vec![1i64, 2, 3, 9])), 3),
        precision in (0i64..=3, 0i64..=3),
    ) {
        let f = BaseField::from_d(d).unwrap();
        let frac = |((a, b), den): &((i64, i64), i64)| &elt(&f, *a, *b) / &f.int(*den);
        let unip = |ps: &[((i64, i64), i64)]| {
            upper(&f, &frac(&ps[0])).mul(&lower(&f, &frac(&ps[1]))).mul(&upper(&f, &frac(&ps[2])))
        };
        let p2 = factor_rational_prime(2, &f).unwrap()[0].clone();
        let p3 = factor_rational_prime(3, &f).unwrap()[0].clone();
        let targets = vec![
            ApproxTarget { place: p2, target: unip(&params), precision: precision.0 },
            ApproxTarget { place: p3, target: unip(&second), precision: precision.1 },
        ];
        let t = sl2_approximate(&f, &targets).unwrap();
        prop_assert!(t.det().is_one());
        for tg in &targets {
            for (x, y) in t.entries().iter().zip(tg.target.entries()) {
                let diff = *x - y;
                prop_assert!(tg.place.val_or_inf(&diff).is_none_or(|v| v > tg.precision));
            }
        }
        for x in t.entries() {
            for p in rational_primes_of_denominator(&f, x) {
                for pl in factor_rational_prime(p, &f).unwrap() {
                    if targets.iter().any(|tg| same_place(&tg.place, &pl)) {
                        continue;
                    }
                    prop_assert!(pl.valuation(x).unwrap() >= 0, "{} not integral at {}", x, pl.name());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 120, rng_seed: RngSeed::Fixed(120), ..ProptestConfig::default() })]

    /// A free basis of I × J exists exactly when I·J is principal; its
    /// columns lie in I × J and its determinant generates I·J.
    #[test]
    fn free_basis_spans_the_ideal_pair(
        d in prop::sample::select(vec![-5i64, -14, -23, -1, 10, 1]),
        i_gens in prop::collection::vec((-6i64..=6, -3i64..=3), 2),
        j_gens in prop::collection::vec((-6i64..=6, -3i64..=3), 2),
        shift in 1i64..=3,
    ) {
        let f = BaseField::from_d(d).unwrap();
        let mk = |g: &[(i64, i64)]| -> Option<FracIdeal> {
            let gens: Vec<NfElement> = g.iter().map(|(a, b)| elt(&f, *a, *b)).filter(|x| !x.is_zero()).collect();
            if gens.is_empty() { None } else { FracIdeal::from_generators(&f, &gens).ok() }
        };
        let (Some(i), Some(j)) = (mk(&i_gens), mk(&j_gens)) else { return Ok(()) };
        // A fractional first factor.
        let i = i.scale(&(&f.int(1) / &f.int(shift)));
        let ij = i.mul(&j);
        match free_basis_of_ideal_pair(&i, &j).unwrap() {
            None => prop_assert!(is_principal(&ij).is_none()),
            Some(b) => {
                prop_assert!(i.contains(&b.a) && i.contains(&b.b));
                prop_assert!(j.contains(&b.c) && j.contains(&b.d));
                prop_assert_eq!(FracIdeal::principal(&f, &b.det()).unwrap(), ij);
            }
        }
    }
}

/// Orders of characters with no root of unity of that order in the field
/// and not a prime power.
const NON_PRIME_POWERS: [u32; 5] = [6, 10, 12, 14, 15];

#[test]
fn decomposable_count_ignores_non_prime_power_order() {
    for (d, h) in CLASS_NUMBERS {
        let f = BaseField::from_d(d).unwrap();
        for n in NON_PRIME_POWERS {
            let r = count_decomposable(n, &f).unwrap();
            assert_eq!(r.count, Count::Exact(h as u64), "order {n} over d = {d}");
        }
    }
}

#[test]
fn dihedral_closed_form_matches_branch_count() {
    for n in 3u32..=12 {
        for k in 1..n {
            if num_integer::gcd(n, k) != 1 || 2 * k > n {
                continue;
            }
            let Ok(report) = count_dihedral(n, k) else {
                // Fields of definition outside the quadratic backend.
                assert!(matches!(n, 7 | 9 | 11), "n = {n}, k = {k}");
                continue;
            };
            let rep = RepSpec::standard(GroupSpec::Dihedral { n, k }, report_field(n, k)).unwrap();
            let direct = count_absolutely_irreducible(&rep).unwrap();
            assert_eq!(report.count, direct.count, "n = {n}, k = {k}");
        }
    }
}

fn report_field(n: u32, k: u32) -> BaseField {
    let rho = btt_core::numfield::dihedral_rho(n, k).unwrap();
    match rho.field() {
        btt_core::numfield::FieldTag::Quadratic(d) => BaseField::from_d(d).unwrap(),
        _ => BaseField::Rational,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, rng_seed: RngSeed::Fixed(24), ..ProptestConfig::default() })]

    /// Conjugating by GL₂(O_K) does not change the count.
    #[test]
    fn irreducible_count_is_conjugation_invariant(
        case in prop::sample::select(vec![(4u32, 1u32, 1i64), (3, 1, 1), (6, 1, 1), (4, 1, -5)]),
        a in (-3i64..=3, -1i64..=1),
        b in (-3i64..=3, -1i64..=1),
    ) {
        let (n, k, d) = case;
        let f = BaseField::from_d(d).unwrap();
        let base = RepSpec::standard(GroupSpec::Dihedral { n, k }, f.clone()).unwrap();
        let p = upper(&f, &elt(&f, a.0, a.1)).mul(&lower(&f, &elt(&f, b.0, b.1)));
        let pi = p.inv().unwrap();
        let gens: Vec<Matrix2> = base.gens.iter().map(|g| pi.mul(g).mul(&p)).collect();
        let conj = RepSpec::new(GroupSpec::Dihedral { n, k }, f.clone(), gens).unwrap();
        let c0 = count_absolutely_irreducible(&base).unwrap().count;
        let c1 = count_absolutely_irreducible(&conj).unwrap().count;
        prop_assert_eq!(c0, c1);
    }
}
