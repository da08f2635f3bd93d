//! The Cox-Hobson barrier of a negative-mean measure.
//!
//! `pi(x) = 2 C(x) + x - 2 m` is convex with subgradient
//! `[1 - 2 mu([x, inf)), 1 - 2 mu((x, inf))]` at `x`. The tangent of slope
//! `theta` first touches `pi` at `u(theta)`, the lower quantile at level
//! `(1 + theta)/2`, and crosses the diagonal at
//! `z(theta) = (pi(u) - theta u)/(1 - theta)`. Since `pi(x) > x`, `z` is
//! continuous and strictly increasing, so `b = u o z^{-1}` is a
//! left-continuous non-decreasing function whose generalised inverse is
//! `Psi^wds` below the top of the support.
//!
//! Slopes are carried as the tail mass `q = (1 - theta)/2` internally, which
//! keeps `1 - theta` exact when it is small.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::io::{Decimal, MeasureRecord};
use crate::measures::{sort_dedup, Measure};

/// Samples appended to the knot rows of an exported CSV.
pub const CSV_SAMPLES: usize = 256;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Error)]
pub enum CoxHobsonError {
    #[error("measure mean {0} is not negative")]
    NonNegativeMean(f64),
    #[error("tangent slope {0} outside [-1, 1)")]
    ThetaOutOfRange(f64),
    #[error("barrier CSV line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("barrier JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Measure(#[from] crate::measures::io::IoError),
}

fn check_mean(m: &Measure) -> Result<f64, CoxHobsonError> {
    let mean = m.mean();
    if mean < 0.0 {
        Ok(mean)
    } else {
        Err(CoxHobsonError::NonNegativeMean(mean))
    }
}

/// `pi(x) = int |y - x| mu(dy) - m`, through put-call parity.
pub fn pi_function(m: &Measure, x: f64) -> Result<f64, CoxHobsonError> {
    let mean = check_mean(m)?;
    Ok(pi_unchecked(m, mean, x))
}

fn pi_unchecked(m: &Measure, mean: f64, x: f64) -> f64 {
    2.0 * m.integrated_survival(x) + x - 2.0 * mean
}

/// Diagonal crossing of the tangent at `u` with slope `1 - 2 q`, `q > 0`.
fn z_at(m: &Measure, mean: f64, u: f64, q: f64) -> f64 {
    (pi_unchecked(m, mean, u) - (1.0 - 2.0 * q) * u) / (2.0 * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TangentPoint {
    /// Slope `-1`: the tangent is only attained as `x -> -inf`.
    LeftRay,
    At(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub theta: f64,
    pub u: TangentPoint,
    pub z: f64,
}

/// `(u(theta), z(theta))` for `theta in [-1, 1)`.
pub fn tangent_construction(m: &Measure, theta: f64) -> Result<Tangent, CoxHobsonError> {
    let mean = check_mean(m)?;
    if !(-1.0..1.0).contains(&theta) {
        return Err(CoxHobsonError::ThetaOutOfRange(theta));
    }
    if theta == -1.0 {
        return Ok(Tangent {
            theta,
            u: TangentPoint::LeftRay,
            z: 0.0,
        });
    }
    let q = (1.0 - theta) / 2.0;
    let u = m.tail_quantile(q);
    Ok(Tangent {
        theta,
        u: TangentPoint::At(u),
        z: z_at(m, mean, u, q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnotKind {
    /// `b = b_j` on `(alpha_j, alpha_{j+1}]`.
    Step,
    /// `b` increases continuously from `b_j` to `b_{j+1}` (or to `r` as
    /// `alpha -> inf` on the last knot).
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub alpha: f64,
    pub b: f64,
    pub kind: KnotKind,
}

#[derive(Debug, Clone)]
struct Source {
    measure: Arc<Measure>,
    mean: f64,
}

impl Source {
    /// `z` at the left slope of `pi` at `x`, i.e. `Psi^wds(x)` for `x < r`.
    fn z_left(&self, x: f64) -> f64 {
        z_at(&self.measure, self.mean, x, self.measure.survival_from(x))
    }
}

/// The barrier `alpha -> b(alpha)` on `alpha >= 0`, with `b(0) = l`.
///
/// On the piece of knot `j`, `(alpha_j, alpha_{j+1}]`, the value is `b_j` for
/// step knots. Linear pieces are resolved exactly through the tangent
/// construction when the source measure is attached and by linear
/// interpolation otherwise.
#[derive(Debug, Clone)]
pub struct Barrier {
    knots: Vec<Knot>,
    r_sup: f64,
    source: Option<Source>,
}

impl PartialEq for Barrier {
    fn eq(&self, other: &Self) -> bool {
        self.knots == other.knots && self.r_sup == other.r_sup
    }
}

/// Builds the Cox-Hobson barrier of `m`.
pub fn barrier(m: &Measure) -> Result<Barrier, CoxHobsonError> {
    let mean = check_mean(m)?;
    let source = Source {
        measure: Arc::new(m.clone()),
        mean,
    };
    let (l, r) = (m.support_inf(), m.support_sup());
    let mut xs: Vec<f64> = m.knots().into_iter().filter(|&x| x >= l && x <= r).collect();
    sort_dedup(&mut xs);

    let mut knots: Vec<Knot> = Vec::new();
    let mut push = |k: Knot| {
        // A knot whose piece is empty can never be selected.
        while knots.last().is_some_and(|last| last.alpha >= k.alpha) {
            knots.pop();
        }
        knots.push(k);
    };
    for (i, &x) in xs.iter().enumerate() {
        let closed = m.survival_from(x);
        if closed <= 0.0 {
            break;
        }
        let alpha = if i == 0 { 0.0 } else { z_at(m, mean, x, closed) };
        push(Knot {
            alpha,
            b: x,
            kind: KnotKind::Step,
        });
        let open = m.survival_after(x);
        let next = xs.get(i + 1).copied().unwrap_or(x);
        let diffuse = next > x && m.survival_after(x) - m.survival_from(next) > 0.0;
        if open > 0.0 && diffuse {
            let alpha = if i == 0 && open == closed {
                0.0
            } else {
                z_at(m, mean, x, open)
            };
            push(Knot {
                alpha,
                b: x,
                kind: KnotKind::Linear,
            });
        }
    }
    Ok(Barrier {
        knots,
        r_sup: r,
        source: Some(source),
    })
}

impl Barrier {
    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn r_sup(&self) -> f64 {
        self.r_sup
    }

    pub fn l_inf(&self) -> f64 {
        self.knots[0].b
    }

    pub fn source(&self) -> Option<&Measure> {
        self.source.as_ref().map(|s| s.measure.as_ref())
    }

    /// The same knots without the source measure: linear pieces interpolate.
    pub fn detached(&self) -> Barrier {
        Barrier {
            source: None,
            ..self.clone()
        }
    }

    /// Upper end of the piece of knot `j`: `(alpha, b)`.
    fn piece_end(&self, j: usize) -> (f64, f64) {
        match self.knots.get(j + 1) {
            Some(k) => (k.alpha, k.b),
            None => (f64::INFINITY, self.r_sup),
        }
    }

    /// `b(alpha)`; `b(alpha) = l` for `alpha <= 0`.
    pub fn eval(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return self.l_inf();
        }
        let j = self.knots.partition_point(|k| k.alpha < alpha) - 1;
        let k = self.knots[j];
        if k.kind == KnotKind::Step {
            return k.b;
        }
        let (a_hi, b_hi) = self.piece_end(j);
        match &self.source {
            // sup { x in [b_j, b_hi] : Psi(x) < alpha }
            Some(src) => {
                let (mut lo, mut hi) = (k.b, b_hi);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if src.z_left(mid) < alpha {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            None if a_hi.is_finite() => k.b + (b_hi - k.b) * (alpha - k.alpha) / (a_hi - k.alpha),
            None => k.b,
        }
    }

    /// `inf { alpha >= 0 : b(alpha) >= x }`.
    pub fn inverse(&self, x: f64) -> f64 {
        let j = self.knots.partition_point(|k| k.b < x);
        if j == 0 {
            return 0.0;
        }
        let prev = j - 1;
        let k = self.knots[prev];
        let (a_hi, b_hi) = self.piece_end(prev);
        if k.kind == KnotKind::Linear && x < b_hi {
            return match &self.source {
                Some(src) => src.z_left(x),
                None if a_hi.is_finite() => k.alpha + (a_hi - k.alpha) * (x - k.b) / (b_hi - k.b),
                None => f64::INFINITY,
            };
        }
        match self.knots.get(j) {
            Some(k) => k.alpha,
            None => f64::INFINITY,
        }
    }

    /// CSV `alpha,b,kind`: knot rows, an `end` row carrying `r` when the
    /// last piece is linear, then [`CSV_SAMPLES`] evaluation samples.
    pub fn to_csv(&self) -> String {
        use crate::measures::io::format_f64 as f;
        let mut out = String::from("alpha,b,kind\n");
        for k in &self.knots {
            let kind = match k.kind {
                KnotKind::Step => "step",
                KnotKind::Linear => "linear",
            };
            out.push_str(&format!("{},{},{kind}\n", f(k.alpha), f(k.b)));
        }
        let last = self.knots[self.knots.len() - 1];
        if last.kind == KnotKind::Linear {
            out.push_str(&format!("inf,{},end\n", f(self.r_sup)));
        }
        let top = if last.alpha > 0.0 { 1.25 * last.alpha } else { 1.0 };
        for i in 0..CSV_SAMPLES {
            let a = top * i as f64 / (CSV_SAMPLES - 1) as f64;
            out.push_str(&format!("{},{},sample\n", f(a), f(self.eval(a))));
        }
        out
    }

    /// Parses [`Barrier::to_csv`] output into a detached barrier.
    pub fn from_csv(text: &str) -> Result<Barrier, CoxHobsonError> {
        let err = |line: usize, msg: &str| CoxHobsonError::Csv {
            line,
            msg: msg.to_owned(),
        };
        let mut knots = Vec::new();
        let mut r_sup = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if i == 0 {
                if line != "alpha,b,kind" {
                    return Err(err(1, "expected header alpha,b,kind"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let [a, b, kind] = cols[..] else {
                return Err(err(i + 1, "expected 3 columns"));
            };
            let num = |s: &str| -> Result<f64, CoxHobsonError> {
                if s == "inf" {
                    return Ok(f64::INFINITY);
                }
                s.parse::<f64>().map_err(|_| err(i + 1, "bad number"))
            };
            let knot = |kind| -> Result<Knot, CoxHobsonError> {
                Ok(Knot {
                    alpha: num(a)?,
                    b: num(b)?,
                    kind,
                })
            };
            match kind {
                "step" => knots.push(knot(KnotKind::Step)?),
                "linear" => knots.push(knot(KnotKind::Linear)?),
                "end" => r_sup = Some(num(b)?),
                "sample" => {}
                _ => return Err(err(i + 1, "unknown kind")),
            }
        }
        let Some(last) = knots.last().copied() else {
            return Err(err(2, "no knots"));
        };
        if knots.windows(2).any(|w| !(w[0].alpha < w[1].alpha) || w[0].b > w[1].b) || knots[0].alpha != 0.0 {
            return Err(err(2, "knots must start at alpha = 0 and increase"));
        }
        let r_sup = match (last.kind, r_sup) {
            (KnotKind::Linear, Some(r)) => r,
            (KnotKind::Linear, None) => return Err(err(2, "linear top piece without end row")),
            (KnotKind::Step, _) => last.b,
        };
        Ok(Barrier {
            knots,
            r_sup,
            source: None,
        })
    }

    pub fn to_json(&self) -> String {
        let rec = BarrierRecord {
            knots: self
                .knots
                .iter()
                .map(|k| KnotRecord {
                    alpha: k.alpha.into(),
                    b: k.b.into(),
                    kind: k.kind,
                })
                .collect(),
            r_sup: self.r_sup.into(),
            source: self.source().map(MeasureRecord::from_measure),
        };
        serde_json::to_string(&rec).expect("barrier records always serialize")
    }

    /// Parses [`Barrier::to_json`]; the source is reattached when present.
    pub fn from_json(text: &str) -> Result<Barrier, CoxHobsonError> {
        let rec: BarrierRecord = serde_json::from_str(text)?;
        let bad = |_| CoxHobsonError::Csv {
            line: 0,
            msg: "bad decimal in barrier JSON".into(),
        };
        let knots = rec
            .knots
            .iter()
            .map(|k| {
                Ok(Knot {
                    alpha: k.alpha.value().map_err(bad)?,
                    b: k.b.value().map_err(bad)?,
                    kind: k.kind,
                })
            })
            .collect::<Result<Vec<_>, CoxHobsonError>>()?;
        let source = match rec.source {
            Some(m) => {
                let measure = m.to_measure()?;
                Some(Source {
                    mean: check_mean(&measure)?,
                    measure: Arc::new(measure),
                })
            }
            None => None,
        };
        Ok(Barrier {
            knots,
            r_sup: rec.r_sup.value().map_err(bad)?,
            source,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct KnotRecord {
    alpha: Decimal,
    b: Decimal,
    kind: KnotKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct BarrierRecord {
    knots: Vec<KnotRecord>,
    r_sup: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<MeasureRecord>,
}

#[cfg(test)]
mod tests;
