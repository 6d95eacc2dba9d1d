//! Acceptance criteria: one PASS/FAIL line per criterion. Criteria 1 to 7
//! aggregate the regression corpus with their runtime limits; criterion 8
//! runs the shared property checks. Known discrepancies print FAIL without
//! failing the target; any other failing case does. The target runs without
//! the test harness so the lines are never captured.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use btt_cli::regression::{run, CaseResult};

/// Cases whose expected value is not reproduced, with the reason.
const KNOWN_DISCREPANCIES: [(&str, &str); 3] = [
    (
        "abelian.c6-over-q15",
        "the generator is integral, so at least one class exists",
    ),
    (
        "rotation.branch",
        "K(i)/K is unramified at 𝟐₁, so the branch is a ball of radius 2 with 10 vertices",
    ),
    (
        "rotation.total",
        "leaves counted modulo O_L^* and filtered by the Artin symbol give 3",
    ),
];

enum Limit {
    Total(Duration),
    Each(Duration),
}

fn report(criterion: u8, title: &str, limit: Limit, results: &[CaseResult]) -> Vec<String> {
    let cases: Vec<&CaseResult> = results
        .iter()
        .filter(|r| r.criterion == criterion)
        .collect();
    assert!(!cases.is_empty(), "criterion {criterion} has no cases");
    let total: Duration = cases.iter().map(|r| r.elapsed).sum();
    let in_time = match limit {
        Limit::Total(d) => total < d,
        Limit::Each(d) => cases.iter().all(|r| r.elapsed < d),
    };
    let failed: Vec<&&CaseResult> = cases.iter().filter(|r| !r.pass).collect();
    let pass = failed.is_empty() && in_time;
    let plural = if cases.len() == 1 { "" } else { "s" };
    let mut detail = format!("{} case{plural} in {} ms", cases.len(), total.as_millis());
    for r in &failed {
        let why = KNOWN_DISCREPANCIES
            .iter()
            .find(|(n, _)| *n == r.name)
            .map_or("unexpected", |(_, w)| w);
        detail.push_str(&format!(
            "; {}: expected {}, observed {} ({why}; see the decisions ledger)",
            r.name, r.expected, r.observed
        ));
    }
    if !in_time {
        detail.push_str("; runtime limit exceeded");
    }
    println!(
        "{} criterion {criterion} ({title}): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    failed.iter().map(|r| r.name.clone()).collect()
}

fn main() {
    let results = run(None);
    let s = Duration::from_secs;
    let mut failing = Vec::new();
    failing.extend(report(
        1,
        "C₂ over Q(√−5) and its table",
        Limit::Total(s(2)),
        &results,
    ));
    failing.extend(report(
        2,
        "free basis of 𝟐₁ × 𝟐₁",
        Limit::Total(s(1)),
        &results,
    ));
    failing.extend(report(
        3,
        "quaternion group over Q(i)",
        Limit::Total(s(2)),
        &results,
    ));
    failing.extend(report(4, "D₄ over Q(√−5)", Limit::Total(s(2)), &results));
    failing.extend(report(5, "abelian cases", Limit::Each(s(1)), &results));
    failing.extend(report(
        6,
        "C₄ over Q(√−5) structure",
        Limit::Total(s(2)),
        &results,
    ));
    failing.extend(report(7, "dihedral suite", Limit::Total(s(5)), &results));

    let start = Instant::now();
    let checks = [
        ("(a) fixed vertices", common::fixed_vertex_tubes()),
        ("(b) Moebius actions", common::moebius_agreement(1000)),
        ("(c) class groups", common::class_numbers_vs_oracles(5000)),
        ("(d) branch maximality", common::branch_maximality(300)),
    ];
    let elapsed = start.elapsed();
    let ok = checks.iter().all(|(_, r)| r.is_ok()) && elapsed < s(60);
    let detail: Vec<String> = checks
        .iter()
        .map(|(name, r)| match r {
            Ok(summary) => format!("{name}: {summary}"),
            Err(e) => format!("{name}: FAILED {e}"),
        })
        .collect();
    println!(
        "{} criterion 8 (property suites): {} in {} ms",
        if ok { "PASS" } else { "FAIL" },
        detail.join("; "),
        elapsed.as_millis()
    );

    let unexpected: Vec<&String> = failing
        .iter()
        .filter(|n| !KNOWN_DISCREPANCIES.iter().any(|(k, _)| k == n))
        .collect();
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
    for (name, r) in &checks {
        assert!(r.is_ok(), "{name}: {:?}", r);
    }
}
