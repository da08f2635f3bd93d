//! JSON file formats for measures and families.
//!
//! Measure values are written as decimal strings using the shortest
//! representation that parses back to the same `f64`, so a write/read cycle
//! is bit-exact:
//!
//! ```json
//! {"atoms":[{"x":"-2","w":"0.5"}],"segments":[{"a":"0","b":"1","coeffs":["1.0"]}]}
//! ```
//!
//! Families wrap measures with a numeric time:
//! `{"family":[{"t":0.5,"measure":{...}}, ...]}`. Both formats accept an
//! optional `provenance` object describing the transform that produced them.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{Atom, FamilyError, Measure, MeasureFamily, Segment, ValidationReport};
use crate::poly::Poly;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed number {0:?}")]
    Number(String),
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Formats an `f64` as the shortest decimal string that round-trips.
pub fn format_f64(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Decimal {
    Text(String),
    Number(f64),
}

impl Decimal {
    pub fn value(&self) -> Result<f64, IoError> {
        match self {
            Decimal::Number(x) => Ok(*x),
            Decimal::Text(s) => match s.trim() {
                "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                t => t.parse::<f64>().map_err(|_| IoError::Number(s.clone())),
            },
        }
    }
}

impl From<f64> for Decimal {
    fn from(x: f64) -> Self {
        Decimal::Text(format_f64(x))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomRecord {
    pub x: Decimal,
    pub w: Decimal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub a: Decimal,
    pub b: Decimal,
    pub coeffs: Vec<Decimal>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureRecord {
    #[serde(default)]
    pub atoms: Vec<AtomRecord>,
    #[serde(default)]
    pub segments: Vec<SegmentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyEntryRecord {
    pub t: f64,
    pub measure: MeasureRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub family: Vec<FamilyEntryRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Value>,
}

impl MeasureRecord {
    pub fn from_measure(m: &Measure) -> Self {
        MeasureRecord {
            atoms: m
                .atoms()
                .iter()
                .map(|a| AtomRecord {
                    x: a.location.into(),
                    w: a.weight.into(),
                })
                .collect(),
            segments: m
                .segments()
                .iter()
                .map(|s| SegmentRecord {
                    a: s.lower.into(),
                    b: s.upper.into(),
                    coeffs: s.density.coeffs().iter().map(|&c| c.into()).collect(),
                })
                .collect(),
            provenance: None,
        }
    }

    pub fn to_measure(&self) -> Result<Measure, IoError> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Ok(Atom::new(a.x.value()?, a.w.value()?)))
            .collect::<Result<Vec<_>, IoError>>()?;
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let coeffs = s.coeffs.iter().map(Decimal::value).collect::<Result<Vec<_>, _>>()?;
                Ok(Segment::with_poly(s.a.value()?, s.b.value()?, Poly::new(coeffs)))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(Measure::new(atoms, segments)?)
    }
}

impl FamilyRecord {
    pub fn from_family(fam: &MeasureFamily) -> Self {
        FamilyRecord {
            family: fam
                .entries()
                .iter()
                .map(|(t, m)| FamilyEntryRecord {
                    t: *t,
                    measure: MeasureRecord::from_measure(m),
                })
                .collect(),
            provenance: None,
        }
    }

    pub fn to_family(&self) -> Result<MeasureFamily, IoError> {
        let entries = self
            .family
            .iter()
            .map(|e| Ok((e.t, e.measure.to_measure()?)))
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(MeasureFamily::new(entries)?)
    }
}

pub fn measure_to_json(m: &Measure, provenance: Option<Value>) -> String {
    let mut rec = MeasureRecord::from_measure(m);
    rec.provenance = provenance;
    serde_json::to_string(&rec).expect("measure records always serialize")
}

pub fn measure_from_json(s: &str) -> Result<Measure, IoError> {
    serde_json::from_str::<MeasureRecord>(s)?.to_measure()
}

pub fn family_to_json(fam: &MeasureFamily, provenance: Option<Value>) -> String {
    let mut rec = FamilyRecord::from_family(fam);
    rec.provenance = provenance;
    serde_json::to_string(&rec).expect("family records always serialize")
}

pub fn family_from_json(s: &str) -> Result<MeasureFamily, IoError> {
    serde_json::from_str::<FamilyRecord>(s)?.to_family()
}
