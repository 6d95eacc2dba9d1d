//! Configured arithmetic of quartic fields L = K(√δ) over a quadratic base K:
//! unit generators of L, generators λ of J·O_L for ideals J of K that become
//! principal in L, and class numbers. The quadratic backend cannot compute
//! these, so they are read from a JSON file and checked on load.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::ideals::{FracIdeal, IdealError};
use crate::numfield::{BaseField, NfElement, NumfieldError};

const BUILTIN: &str = include_str!("../data/quartic_fields.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("malformed configuration: {0}")]
    Json(String),
    #[error("entry {name}: {msg}")]
    Invalid { name: String, msg: String },
    #[error(transparent)]
    Numfield(#[from] NumfieldError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
}

#[derive(Clone, Debug, Deserialize)]
pub struct CapitulationEntry {
    /// Generators of J in K.
    pub ideal: Vec<String>,
    /// λ = x + y√δ with λ·O_L = J·O_L.
    pub lambda: [String; 2],
}

#[derive(Clone, Debug, Deserialize)]
pub struct QuarticEntry {
    pub name: String,
    pub base_d: i64,
    pub delta: String,
    /// Generators x + y√δ of O_L^* modulo O_K^*.
    pub units: Vec<[String; 2]>,
    #[serde(default)]
    pub capitulation: Vec<CapitulationEntry>,
    pub class_number: Option<u64>,
    pub relative_class_number: Option<u64>,
    pub source: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct QuarticConfig {
    pub fields: Vec<QuarticEntry>,
    #[serde(skip)]
    pub origin: String,
}

/// An element x + y√δ of L, with x and y in K.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelElement {
    pub x: NfElement,
    pub y: NfElement,
}

impl RelElement {
    /// N_{L/K}(x + y√δ) = x² − δ y².
    pub fn norm(&self, delta: &NfElement) -> NfElement {
        &(&self.x * &self.x) - &(&(&self.y * &self.y) * delta)
    }

    /// The same element written over √δ' where δ = c² δ'.
    pub fn rescale(&self, c: &NfElement) -> RelElement {
        RelElement {
            x: self.x.clone(),
            y: &self.y * c,
        }
    }
}

/// The data of one entry resolved against a base field and a δ in the same
/// square class as the configured one.
#[derive(Clone, Debug)]
pub struct ResolvedQuartic {
    pub entry: QuarticEntry,
    pub units: Vec<RelElement>,
    pub capitulation: Vec<(FracIdeal, RelElement)>,
    pub source: String,
}

impl QuarticConfig {
    pub fn builtin() -> Self {
        let mut c: QuarticConfig =
            serde_json::from_str(BUILTIN).expect("builtin configuration parses");
        c.origin = "builtin data/quartic_fields.json".into();
        c
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))?;
        let mut c: QuarticConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Json(e.to_string()))?;
        c.origin = path.display().to_string();
        Ok(c)
    }

    /// Finds the entry for K(√δ) and expresses its data over √δ; every unit
    /// and every λ is checked against its claimed norm.
    pub fn resolve(
        &self,
        field: &BaseField,
        delta: &NfElement,
    ) -> Result<Option<ResolvedQuartic>, ConfigError> {
        let d = match field.quadratic() {
            Some(q) => q.d,
            None => return Ok(None),
        };
        let delta = field.lift(delta)?;
        for e in self.fields.iter().filter(|e| e.base_d == d) {
            let de = NfElement::parse(&e.delta, field.tag())?;
            // δ = c² δ_e, so √δ_e = √δ / c.
            let Some(c) = (&delta / &de).sqrt() else {
                continue;
            };
            let cinv = c.inv()?;
            let invalid = |msg: String| ConfigError::Invalid {
                name: e.name.clone(),
                msg,
            };
            let parse = |p: &[String; 2]| -> Result<RelElement, ConfigError> {
                let x = NfElement::parse(&p[0], field.tag())?;
                let y = NfElement::parse(&p[1], field.tag())?;
                Ok(RelElement { x, y }.rescale(&cinv))
            };
            let mut units = Vec::new();
            for u in &e.units {
                let r = parse(u)?;
                let n = r.norm(&delta);
                // Integral with unit norm iff the trace 2x is integral and the
                // norm generates the unit ideal.
                if !field.is_integral(&(&r.x * &field.int(2)))
                    || !FracIdeal::principal(field, &n)?.is_unit_ideal()
                {
                    return Err(invalid(format!("{u:?} is not a unit")));
                }
                units.push(r);
            }
            let mut cap = Vec::new();
            for c in &e.capitulation {
                let gens: Vec<NfElement> = c
                    .ideal
                    .iter()
                    .map(|s| NfElement::parse(s, field.tag()))
                    .collect::<Result<_, _>>()?;
                let j = FracIdeal::from_generators(field, &gens)?;
                let lam = parse(&c.lambda)?;
                if FracIdeal::principal(field, &lam.norm(&delta))? != j.mul(&j) {
                    return Err(invalid(format!(
                        "N(λ) does not generate J² for λ = {:?}",
                        c.lambda
                    )));
                }
                cap.push((j, lam));
            }
            return Ok(Some(ResolvedQuartic {
                entry: e.clone(),
                units,
                capitulation: cap,
                source: format!("{} ({})", e.source, self.origin),
            }));
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_entries_resolve() {
        let c = QuarticConfig::builtin();
        let k = BaseField::from_d(-5).unwrap();
        let r = c.resolve(&k, &k.int(-4)).unwrap().unwrap();
        assert_eq!(r.units.len(), 2);
        assert_eq!(r.capitulation.len(), 1);
        // i = (1/2)·√−4.
        assert_eq!(r.units[0].y, NfElement::parse("1/2", k.tag()).unwrap());
        let k = BaseField::from_d(-15).unwrap();
        assert!(c.resolve(&k, &k.int(-3)).unwrap().is_some());
        assert!(c.resolve(&k, &k.int(-1)).unwrap().is_none());
        assert!(c
            .resolve(&BaseField::Rational, &BaseField::Rational.int(-1))
            .unwrap()
            .is_none());
    }
}
