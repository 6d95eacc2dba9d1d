//! Job files: a base field, a group, optional generator matrices and
//! options, in JSON. Field elements are exact strings such as
//! "1/2 + 3/2*sqrt(-15)".

use std::path::{Path, PathBuf};

use btt_core::counting::{GroupSpec, RepSpec, Word};
use btt_core::matrix::Matrix2;
use btt_core::numfield::BaseField;
use serde::Deserialize;

use crate::error::CliError;

/// `"Q"`, `"Q(i)"`, `"Q(sqrt(-5))"` or `{"d": -5}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldDesc {
    Name(String),
    Param { d: i64 },
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GroupDesc {
    Cyclic {
        n: u32,
        #[serde(default = "one")]
        k: u32,
    },
    Dihedral {
        n: u32,
        #[serde(default = "one")]
        k: u32,
    },
    Quaternion8,
    /// Relators are words of (generator index, exponent) pairs.
    Presentation {
        generators: usize,
        relators: Vec<Vec<(usize, i64)>>,
        #[serde(default)]
        order: Option<usize>,
    },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobOptions {
    /// Quartic field data replacing the built-in table.
    #[serde(default)]
    pub config: Option<PathBuf>,
    /// Half-length of the listed stem window for infinite branches.
    #[serde(default)]
    pub window: Option<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub field: FieldDesc,
    pub group: GroupDesc,
    /// Generator images, each given row by row.
    #[serde(default)]
    pub generators: Option<Vec<[[String; 2]; 2]>>,
    #[serde(default)]
    pub options: JobOptions,
}

impl JobSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn field(&self) -> Result<BaseField, CliError> {
        parse_field(&self.field)
    }

    pub fn group(&self) -> Result<GroupSpec, CliError> {
        Ok(match &self.group {
            GroupDesc::Cyclic { n, k } => GroupSpec::Cyclic { n: *n, k: *k },
            GroupDesc::Dihedral { n, k } => GroupSpec::Dihedral { n: *n, k: *k },
            GroupDesc::Quaternion8 => GroupSpec::Quaternion8,
            GroupDesc::Presentation {
                generators,
                relators,
                order,
            } => {
                if relators.iter().flatten().any(|(g, _)| g >= generators) {
                    return Err(CliError::Schema(
                        "relator refers to a missing generator".into(),
                    ));
                }
                let relators: Vec<Word> = relators.clone();
                GroupSpec::Presentation {
                    generators: *generators,
                    relators,
                    order: *order,
                }
            }
        })
    }

    /// The representation: explicit generators when given, otherwise the
    /// standard one for the group.
    pub fn rep(&self) -> Result<RepSpec, CliError> {
        let field = self.field()?;
        let group = self.group()?;
        match &self.generators {
            Some(gens) => {
                if gens.len() != group.generators() {
                    return Err(CliError::Schema(format!(
                        "{} generator matrices given, the group has {}",
                        gens.len(),
                        group.generators()
                    )));
                }
                let mats: Vec<Matrix2> = gens
                    .iter()
                    .map(|m| Matrix2::parse(&field, m))
                    .collect::<Result<_, _>>()?;
                Ok(RepSpec::new(group, field, mats)?)
            }
            None => {
                if matches!(group, GroupSpec::Presentation { .. }) {
                    return Err(CliError::Schema(
                        "a presentation needs explicit generator matrices".into(),
                    ));
                }
                Ok(RepSpec::standard(group, field)?)
            }
        }
    }
}

/// Parses a field descriptor; fields of degree above 2 are reported as
/// unsupported rather than malformed.
pub fn parse_field(desc: &FieldDesc) -> Result<BaseField, CliError> {
    match desc {
        FieldDesc::Param { d } => Ok(BaseField::from_d(*d)?),
        FieldDesc::Name(s) => {
            let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            if ["Q(zeta", "Q(cbrt", "Q(root"]
                .iter()
                .any(|p| t.starts_with(p))
            {
                return Err(CliError::Unsupported(format!(
                    "field {s} has degree above 2"
                )));
            }
            Ok(BaseField::parse(&t)?)
        }
    }
}
