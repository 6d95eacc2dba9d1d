//! Class numbers checked against two independent oracles: a count of
//! reduced positive definite forms, and the determinant of the relation
//! lattice among prime ideals below the Minkowski bound.

mod common;

#[test]
fn class_numbers_match_oracles_up_to_5000() {
    let summary = common::class_numbers_vs_oracles(5000).unwrap();
    eprintln!("{summary}");
}
