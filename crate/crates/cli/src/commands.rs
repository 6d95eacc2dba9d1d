//! The subcommands as functions from a job to a JSON value. Objects are
//! built from `serde_json::Map`, which keeps keys sorted, so identical jobs
//! give byte-identical output.

use std::path::Path;

use btt_core::branch::{
    branch_bfs, branch_closed_form, exceptional_places, BranchError, BranchReport, BranchShape,
};
use btt_core::config::QuarticConfig;
use btt_core::counting::{count, Count, CountReport, RepSpec};
use btt_core::ideals::{class_group, factor_rational_prime, place_by_name};
use btt_core::localtree::{LocalTree, ProjPoint};
use btt_core::matrix::Matrix2;
use btt_core::numfield::BaseField;
use btt_core::synth::{synthesize_representatives, verify_integral_rep, Representative};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::job::JobSpec;

/// Stem window used for infinite branches when the job sets none.
pub const DEFAULT_WINDOW: i64 = 2;

/// The explicit path wins over the job option; the built-in table is the
/// fallback.
pub fn load_config(explicit: Option<&Path>, job: &JobSpec) -> Result<QuarticConfig, CliError> {
    match explicit.or(job.options.config.as_deref()) {
        Some(p) => Ok(QuarticConfig::load(p)?),
        None => Ok(QuarticConfig::builtin()),
    }
}

fn count_report(rep: &RepSpec, config: &QuarticConfig) -> Result<CountReport, CliError> {
    Ok(count(rep, config)?)
}

fn with_header(mut v: Value, rep: &RepSpec) -> Value {
    v["group"] = json!(rep.group.name());
    v["field"] = json!(rep.field.to_string());
    v
}

/// `btt count`: the count report of the job's representation.
pub fn cmd_count(job: &JobSpec, config: &QuarticConfig) -> Result<Value, CliError> {
    let rep = job.rep()?;
    let report = count_report(&rep, config)?;
    let mut v = report.to_json();
    if let Some(c) = &report.closed_form {
        v["closed_form"] = c.to_json();
    }
    Ok(with_header(v, &rep))
}

/// Representatives with their verification status, checked against the
/// count.
pub fn representatives(
    rep: &RepSpec,
    config: &QuarticConfig,
) -> Result<(CountReport, Vec<Representative>), CliError> {
    let report = count_report(rep, config)?;
    if let Count::Symbolic { .. } = report.count {
        return Err(CliError::Symbolic(with_header(report.to_json(), rep)));
    }
    let reps = synthesize_representatives(rep, &report)?;
    let relators = rep.group.relators();
    if let Some(bad) = reps
        .iter()
        .position(|r| !verify_integral_rep(&rep.field, &r.generators, &relators))
    {
        return Err(CliError::Failed(format!(
            "representative {bad} fails verification"
        )));
    }
    Ok((report, reps))
}

/// `btt enumerate`: one verified integral representation per class.
pub fn cmd_enumerate(job: &JobSpec, config: &QuarticConfig) -> Result<Value, CliError> {
    let rep = job.rep()?;
    let (report, reps) = representatives(&rep, config)?;
    let list: Vec<Value> = reps
        .iter()
        .map(|r| {
            let mut v = r.to_json();
            v["verified"] = json!(true);
            v
        })
        .collect();
    let v = json!({
        "count": report.count.to_json(),
        "theorem": report.theorem,
        "places": report.places.iter().map(|p| p.name()).collect::<Vec<_>>(),
        "representatives": list,
    });
    Ok(with_header(v, &rep))
}

/// Result of `btt branch`.
pub struct BranchOutput {
    pub summary: Value,
    pub dot: String,
}

fn proj_string(z: &ProjPoint) -> String {
    match z {
        ProjPoint::Finite(x) => x.to_string(),
        ProjPoint::Infinity => "infinity".into(),
    }
}

fn shape_json(shape: &BranchShape) -> Value {
    match shape {
        BranchShape::ApartmentTube { width, ends } => {
            json!({ "kind": "apartment-tube", "width": width, "ends": [proj_string(&ends.0), proj_string(&ends.1)] })
        }
        BranchShape::SingleVertexBall { center, radius } => {
            json!({ "kind": "vertex-ball", "center": center.to_string(), "radius": radius })
        }
        BranchShape::EdgeBall { centers, radius } => {
            json!({ "kind": "edge-ball", "centers": [centers[0].to_string(), centers[1].to_string()], "radius": radius })
        }
        BranchShape::Empty => json!({ "kind": "empty" }),
        BranchShape::Explicit => json!({ "kind": "explicit" }),
    }
}

fn commute(x: &Matrix2, y: &Matrix2) -> bool {
    x.mul(y) == y.mul(x)
}

/// The branch of the job's representation at one place, as computed for
/// `btt branch`.
pub fn branch_report(
    job: &JobSpec,
    place_name: &str,
    window: Option<i64>,
) -> Result<(LocalTree, BranchReport, Option<String>), CliError> {
    let rep = job.rep()?;
    let place = place_by_name(&rep.field, place_name)
        .ok_or_else(|| CliError::Schema(format!("no place named {place_name} in {}", rep.field)))?;
    let tree = LocalTree::new(&place);
    let window = window.or(job.options.window).unwrap_or(DEFAULT_WINDOW);
    let commutative = rep
        .gens
        .iter()
        .all(|x| rep.gens.iter().all(|y| commute(x, y)));
    let trivial = |note: String| {
        let root = tree.root();
        let report = BranchReport {
            place: place.clone(),
            shape: BranchShape::SingleVertexBall {
                center: root.clone(),
                radius: 0,
            },
            stem: vec![root],
            foliage: vec![],
            others: vec![],
            truncated: false,
        };
        (report, Some(note))
    };
    let (report, note) = if commutative {
        match rep.gens.iter().find(|g| !g.is_scalar()) {
            None => trivial("the image is scalar".into()),
            Some(key) => match branch_closed_form(key, &place, window) {
                Ok(r) => (r, None),
                Err(BranchError::EigenvaluesNotInField) => {
                    return Err(CliError::Unsupported(
                        "locally split generator with fixed points outside K".into(),
                    ))
                }
                Err(e) => return Err(e.into()),
            },
        }
    } else if !exceptional_places(&rep.gens, &rep.field)?
        .iter()
        .any(|p| p.ideal == place.ideal)
    {
        trivial(format!(
            "{} is not exceptional: the branch is the distinguished vertex alone",
            place.name()
        ))
    } else {
        (branch_bfs(&rep.gens, &place, &[tree.root()])?, None)
    };
    Ok((tree, report, note))
}

/// `btt branch`: a JSON summary and the Graphviz rendering.
pub fn cmd_branch(
    job: &JobSpec,
    place_name: &str,
    window: Option<i64>,
) -> Result<BranchOutput, CliError> {
    let (tree, report, note) = branch_report(job, place_name, window)?;
    let mut dot = report.to_dot(&tree);
    if let Some(n) = &note {
        let at = dot.find('\n').map_or(0, |i| i + 1);
        dot.insert_str(at, &format!("  // {n}\n"));
    }
    let summary = json!({
        "place": report.place.name(),
        "shape": shape_json(&report.shape),
        "vertices": report.vertices().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "stem": report.stem.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "foliage": report
            .foliage
            .iter()
            .map(|f| json!({ "vertex": f.vertex.to_string(), "anchor": f.anchor.to_string(), "depth": f.depth }))
            .collect::<Vec<_>>(),
        "truncated": report.truncated,
        "note": note,
    });
    Ok(BranchOutput { summary, dot })
}

/// `btt field-info`: discriminant, class group, units and the
/// factorization of small primes.
pub fn cmd_field_info(field: &BaseField) -> Result<Value, CliError> {
    let g = class_group(field)?;
    let mut primes = serde_json::Map::new();
    for p in [2u64, 3, 5, 7] {
        let places = factor_rational_prime(p, field)?;
        primes.insert(
            p.to_string(),
            json!(places.iter().map(|pl| json!({ "name": pl.name(), "ideal": pl.ideal.to_string(), "residue_size": pl.residue_size })).collect::<Vec<_>>()),
        );
    }
    Ok(json!({
        "field": field.to_string(),
        "degree": field.degree(),
        "discriminant": field.discriminant(),
        "class_number": g.order(),
        "class_group": g.structure().iter().map(|(_, n)| n).collect::<Vec<_>>(),
        "two_torsion": g.two_torsion().len(),
        "torsion_units": field.torsion_units().len(),
        "unit_generators": field.unit_generators().iter().map(|u| u.to_string()).collect::<Vec<_>>(),
        "small_primes": Value::Object(primes),
    }))
}
