//! Property suites for the local trees and branches: fixed vertices of
//! torsion elements against brute force, the two Moebius actions against
//! each other, and maximality of every branch report.

mod common;

use common::{elt, tree, PLACES};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

#[test]
fn fixed_vertices_of_roots_of_unity_form_tubes() {
    common::fixed_vertex_tubes().unwrap();
}

#[test]
fn moebius_actions_agree() {
    common::moebius_agreement(1000).unwrap();
}

#[test]
fn branches_are_maximal() {
    common::branch_maximality(300).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, rng_seed: RngSeed::Fixed(200), ..ProptestConfig::default() })]

    /// Neighbors are exactly the vertices at distance one, and the distance
    /// obeys the triangle inequality.
    #[test]
    fn neighbors_and_distance_are_consistent(
        which in 0usize..PLACES.len(),
        a in (-6i64..=6, -3i64..=3, -2i64..=3),
        b in (-6i64..=6, -3i64..=3, -2i64..=3),
    ) {
        let (d, p, idx) = PLACES[which];
        let t = tree(d, p, idx);
        let f = t.field.clone();
        let v = t.vertex(&elt(&f, a.0, a.1), a.2).unwrap();
        let w = t.vertex(&elt(&f, b.0, b.1), b.2).unwrap();
        let n = t.neighbors(&v).unwrap();
        prop_assert_eq!(n.len() as u64, t.place.residue_size + 1);
        for x in &n {
            prop_assert_eq!(t.distance(&v, x), 1);
            prop_assert!(t.distance(x, &w) <= t.distance(&v, &w) + 1);
            prop_assert!(t.distance(&v, &w) <= t.distance(x, &w) + 1);
        }
        prop_assert_eq!(t.distance(&v, &w), t.distance(&w, &v));
    }
}
