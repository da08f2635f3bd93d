//! Built-in families with closed-form `Psi^wds`, plus the negative controls.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{Atom, Measure, MeasureFamily, Segment};
use crate::poly::Poly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExampleError {
    #[error("{family}: parameter {param} = {value} outside {range}")]
    ParamOutOfRange {
        family: &'static str,
        param: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{0}")]
    Family(#[from] crate::measures::FamilyError),
}

fn out_of_range(family: &'static str, param: &'static str, value: f64, range: &'static str) -> ExampleError {
    ExampleError::ParamOutOfRange {
        family,
        param,
        value,
        range,
    }
}

/// Discrete family `(1 - t^k + t^(k+1)) delta_{-t^k} + (t^k - t^(k+1)) delta_{1-t^k}`,
/// `t in (0, 1)`. WDS ordered, not stochastically monotone.
pub fn discrete(k: u32, t: f64) -> Result<Measure, ExampleError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(out_of_range("discrete", "t", t, "(0, 1)"));
    }
    let tk = t.powi(k as i32);
    let upper = tk - tk * t;
    Ok(
        Measure::new(vec![Atom::new(-tk, 1.0 - upper), Atom::new(1.0 - tk, upper)], vec![])
            .expect("weights sum to one"),
    )
}

/// Left edge of the uniform piece of the [`density`] family.
pub fn density_alpha(k: u32, t: f64) -> f64 {
    let k = k as f64;
    (k + 1.0) / (k + 2.0) * (2.0 * t).powf(k + 2.0) * (2.0 * t + 1.0) / (2.0 - t)
}

/// Density family: uniform mass `(2 - t)/2` on `[-alpha(t), 0)` and
/// `(k+1) t^(k+2)/2 * y^k` on `[0, 1/t)`, for `t in (1/2, 2)`, `k <= 8`.
pub fn density(k: u32, t: f64) -> Result<Measure, ExampleError> {
    if !(t > 0.5 && t < 2.0) {
        return Err(out_of_range("density", "t", t, "(1/2, 2)"));
    }
    if k > 8 {
        return Err(out_of_range("density", "k", k as f64, "0..=8"));
    }
    let alpha = density_alpha(k, t);
    let mut coeffs = vec![0.0; k as usize + 1];
    coeffs[k as usize] = (k as f64 + 1.0) * t.powi(k as i32 + 2) / 2.0;
    Ok(Measure::new(
        vec![],
        vec![
            Segment::new(-alpha, 0.0, vec![(2.0 - t) / (2.0 * alpha)]),
            Segment::with_poly(0.0, 1.0 / t, Poly::new(coeffs)),
        ],
    )
    .expect("density family integrates to one"))
}

/// `1/(1+t) delta_{-t} + t/(1+t) delta_{1-t}`, `t > 0`.
pub fn two_atom(t: f64) -> Result<Measure, ExampleError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(out_of_range("two-atom", "t", t, "(0, inf)"));
    }
    Ok(Measure::new(
        vec![Atom::new(-t, 1.0 / (1.0 + t)), Atom::new(1.0 - t, t / (1.0 + t))],
        vec![],
    )
    .expect("weights sum to one"))
}

/// [`two_atom`] translated by `-1`; not WDS ordered.
pub fn translated(t: f64) -> Result<Measure, ExampleError> {
    Ok(two_atom(t)?.translate(-1.0))
}

/// `base` translated by `-c t`: stochastically non-increasing for `c >= 0`.
pub fn shifted(base: &Measure, c: f64, t: f64) -> Measure {
    base.translate(-c * t)
}

/// Symmetric discretisation of `N(mean, sd^2)` on `mean +- 6 sd`
/// with `2 * half_points + 1` atoms. The mean is exact up to rounding.
pub fn gaussian_peacock(mean: f64, sd: f64, half_points: usize) -> Result<Measure, ExampleError> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(out_of_range("peacock", "sd", sd, "(0, inf)"));
    }
    if half_points == 0 {
        return Err(out_of_range("peacock", "half_points", 0.0, "1.."));
    }
    let h = 6.0 / half_points as f64;
    let raw: Vec<f64> = (0..=half_points)
        .map(|i| (-0.5 * (i as f64 * h).powi(2)).exp())
        .collect();
    let total = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
    let mut atoms = Vec::with_capacity(2 * half_points + 1);
    for i in (1..=half_points).rev() {
        atoms.push(Atom::new(mean - sd * i as f64 * h, raw[i] / total));
    }
    atoms.push(Atom::new(mean, raw[0] / total));
    for (i, w) in raw.iter().enumerate().skip(1) {
        atoms.push(Atom::new(mean + sd * i as f64 * h, w / total));
    }
    Ok(Measure::from_parts(atoms, vec![]).expect("normalised weights"))
}

/// Named built-in families, indexed by the time grid passed to
/// [`example_family`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Example {
    Discrete {
        k: u32,
    },
    Density {
        k: u32,
    },
    TwoAtom,
    Translated,
    /// `delta_{-c t}`.
    ShiftedDirac {
        c: f64,
    },
    /// Constant mean, standard deviation equal to the time index.
    Peacock {
        mean: f64,
        half_points: usize,
    },
}

impl Example {
    pub fn measure(&self, t: f64) -> Result<Measure, ExampleError> {
        match *self {
            Example::Discrete { k } => discrete(k, t),
            Example::Density { k } => density(k, t),
            Example::TwoAtom => two_atom(t),
            Example::Translated => translated(t),
            Example::ShiftedDirac { c } => Ok(shifted(&Measure::dirac(0.0), c, t)),
            Example::Peacock { mean, half_points } => gaussian_peacock(mean, t, half_points),
        }
    }

    /// A time grid inside the admissible range.
    pub fn default_times(&self) -> Vec<f64> {
        match self {
            Example::Discrete { .. } => (1..=9).map(|i| i as f64 / 10.0).collect(),
            Example::Density { .. } => vec![0.6, 1.0, 1.5],
            Example::TwoAtom | Example::Translated => vec![0.25, 0.5, 0.75],
            Example::ShiftedDirac { .. } => vec![1.0, 2.0, 3.0],
            Example::Peacock { .. } => vec![0.5, 1.0],
        }
    }
}

pub fn example_family(example: &Example, times: &[f64]) -> Result<MeasureFamily, ExampleError> {
    let entries = times
        .iter()
        .map(|&t| Ok((t, example.measure(t)?)))
        .collect::<Result<Vec<_>, ExampleError>>()?;
    Ok(MeasureFamily::new(entries)?)
}
