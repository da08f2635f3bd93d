//! WDS-preserving constructions and the built-in example families.
//!
//! Censoring, convex combination and subordination are exact; random
//! translation and scale mixing are lattice approximations (see
//! [`smoothing`]) whose renormalisation factor is reported.

pub mod density;
pub mod examples;
pub mod kernel;
pub mod smoothing;

pub use density::{LogConcaveDensity, PositiveDensity};
pub use examples::{example_family, Example, ExampleError};
pub use kernel::{subordinate, MixingKernel};
pub use smoothing::{random_translate, random_translate_family, scale_mix, scale_mix_family};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::measures::{Atom, FamilyError, Measure, MeasureFamily, Segment, ValidationReport};
use crate::orderings::{Tp2Error, Tp2Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("censoring interval [{a}, {b}] is degenerate")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("tau out of range: {0}")]
    TauOutOfRange(String),
    #[error("translation density has mean {mean}, not centred")]
    NotCentered { mean: f64 },
    #[error("log-density is not concave at grid index {index}")]
    NotLogConcave { index: usize },
    #[error("density is positive at x = {x} <= 0")]
    NotPositiveSupport { x: f64 },
    #[error("density of the log variable is not log-concave at grid index {index}")]
    NotLogLogConcave { index: usize },
    #[error("kernel is not TP2: {0:?}")]
    KernelNotTP2(Box<Tp2Violation>),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("input mean {mean} is not negative")]
    NonNegativeMean { mean: f64 },
    #[error("lattice mass of the smoothing density is {factor}, outside [0.999, 1/0.999]")]
    Renormalization { factor: f64 },
    #[error(transparent)]
    Tp2(#[from] Tp2Error),
    #[error(transparent)]
    Measure(#[from] ValidationReport),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Provenance block stored next to a transformed measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub transform: String,
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalization: Option<f64>,
}

impl Provenance {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("provenance always serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub measure: Measure,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedFamily {
    pub family: MeasureFamily,
    pub provenance: Provenance,
}

/// Moves the mass of `[a, b]` to `{a, b}` by barycentric split; the mean
/// is unchanged.
pub fn censor(m: &Measure, a: f64, b: f64) -> Result<Measure, TransformError> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(TransformError::DegenerateInterval { a, b });
    }
    let (ma, qa) = m.tail(a);
    let (mb, qb) = m.tail_open(b);
    let (mass, mom) = (ma - mb, qa - qb);
    if mass <= 0.0 {
        return Ok(m.clone());
    }
    let alpha = ((b * mass - mom) / (b - a)).max(0.0);
    let beta = ((mom - a * mass) / (b - a)).max(0.0);
    let mut atoms: Vec<Atom> = m
        .atoms()
        .iter()
        .filter(|x| x.location < a || x.location > b)
        .copied()
        .collect();
    atoms.extend([Atom::new(a, alpha), Atom::new(b, beta)]);
    let mut segments = Vec::new();
    for s in m.segments() {
        if s.lower < a {
            segments.push(Segment::with_poly(s.lower, s.upper.min(a), s.density.clone()));
        }
        if s.upper > b {
            segments.push(Segment::with_poly(s.lower.max(b), s.upper, s.density.clone()));
        }
    }
    Ok(Measure::from_parts(atoms, segments)?)
}

/// [`censor`] with the same interval for every member.
pub fn censor_family(fam: &MeasureFamily, a: f64, b: f64) -> Result<TransformedFamily, TransformError> {
    Ok(TransformedFamily {
        family: fam.map(|_, m| censor(m, a, b))?,
        provenance: Provenance {
            transform: "censor".into(),
            params: json!({ "a": a, "b": b }),
            renormalization: None,
        },
    })
}

/// Replaces every member at a time inside `[tau_0, tau_r]` by the linear
/// interpolation in `t` of the members at the bracketing `tau` values.
/// Every `tau_i` must be a family time.
pub fn convex_combine_family(fam: &MeasureFamily, tau: &[f64]) -> Result<TransformedFamily, TransformError> {
    if tau.len() < 2 {
        return Err(TransformError::TauOutOfRange(format!(
            "need at least 2 values, got {}",
            tau.len()
        )));
    }
    if let Some(i) = tau.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(TransformError::TauOutOfRange(format!(
            "not increasing at index {}",
            i + 1
        )));
    }
    let anchors = tau
        .iter()
        .map(|&t| {
            fam.get(t)
                .ok_or_else(|| TransformError::TauOutOfRange(format!("{t} is not a family time")))
        })
        .collect::<Result<Vec<&Measure>, _>>()?;
    let entries = fam
        .entries()
        .iter()
        .map(|(t, m)| {
            let t = *t;
            if t <= tau[0] || t >= tau[tau.len() - 1] || tau.contains(&t) {
                return Ok((t, m.clone()));
            }
            let i = tau.partition_point(|&x| x < t) - 1;
            let p = (tau[i + 1] - t) / (tau[i + 1] - tau[i]);
            Ok((t, Measure::mixture(&[(p, anchors[i]), (1.0 - p, anchors[i + 1])])?))
        })
        .collect::<Result<Vec<_>, TransformError>>()?;
    Ok(TransformedFamily {
        family: MeasureFamily::new(entries)?,
        provenance: Provenance {
            transform: "convex-combine".into(),
            params: json!({ "tau": tau }),
            renormalization: None,
        },
    })
}

#[cfg(test)]
mod tests;
