//! Random translation and scale mixing on a common lattice.
//!
//! Each member is first projected onto the lattice by the barycentric split
//! of every lattice cell (a censoring per cell, so WDS order is kept), then
//! convolved in index space with lattice weights of the smoothing law. On a
//! uniform lattice the weights are samples of a log-concave density, hence a
//! PF2 sequence; on the geometric lattice used for scale mixing the same
//! holds for `log Y`. All members of a family share the lattice, so the
//! discrete convolution keeps `K` TP2 on the lattice and linear in between.

use rayon::prelude::*;
use serde_json::json;

use super::density::{LogConcaveDensity, PositiveDensity};
use super::{Provenance, TransformError, Transformed, TransformedFamily};
use crate::measures::{Atom, Measure, MeasureFamily};

/// Points of the uniform lattice; the geometric lattice has one less.
pub const LATTICE_POINTS: usize = 2048;
/// Half-width of the smoothing law kept, in standard deviations.
pub const SPREAD_SIGMAS: f64 = 6.0;
/// Smallest nonzero lattice magnitude relative to the largest.
pub const GEOMETRIC_RANGE: f64 = 1e-4;
/// Minimum lattice Riemann mass of the smoothing density.
pub const MIN_RENORMALIZATION: f64 = 0.999;
/// Largest `|mean|` of a centred translation density.
pub const CENTRED_TOL: f64 = 1e-9;

/// Barycentric projection of `m` onto sorted points covering its support.
fn project(m: &Measure, pts: &[f64]) -> Vec<f64> {
    let n = pts.len();
    let mut w = vec![0.0; n];
    let (l, r) = (m.support_inf(), m.support_sup());
    let lo = pts.partition_point(|&p| p <= l).saturating_sub(1);
    let hi = pts.partition_point(|&p| p < r).min(n - 1);
    for k in lo..hi {
        let (a, b) = (pts[k], pts[k + 1]);
        let (ma, qa) = m.tail(a);
        let (mb, qb) = m.tail(b);
        let (mass, mom) = (ma - mb, qa - qb);
        if mass <= 0.0 {
            continue;
        }
        w[k] += ((b * mass - mom) / (b - a)).max(0.0);
        w[k + 1] += ((mom - a * mass) / (b - a)).max(0.0);
    }
    w[hi] += m.tail(pts[hi]).0;
    w
}

/// Lattice weights `w_j`, `j in jlo..=jhi`, normalised, with the raw
/// Riemann mass `sum f(j step) step`.
fn lattice_weights(
    density: &LogConcaveDensity,
    step: f64,
    window: (f64, f64),
) -> Result<(i64, Vec<f64>, f64), TransformError> {
    let (lo, hi) = density.support();
    let jlo = (lo.max(window.0) / step).ceil() as i64;
    let jhi = (hi.min(window.1) / step).floor() as i64;
    let raw: Vec<f64> = (jlo..=jhi)
        .map(|j| density.log_density(j as f64 * step).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let factor = total * step;
    if !(MIN_RENORMALIZATION..=1.0 / MIN_RENORMALIZATION).contains(&factor) {
        return Err(TransformError::Renormalization { factor });
    }
    Ok((jlo, raw.iter().map(|v| v / total).collect(), factor))
}

fn negative_means(members: &[&Measure]) -> Result<(), TransformError> {
    match members.iter().find(|m| m.mean() >= 0.0) {
        Some(m) => Err(TransformError::NonNegativeMean { mean: m.mean() }),
        None => Ok(()),
    }
}

fn atoms_to_measure(atoms: Vec<Atom>) -> Measure {
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    let atoms = atoms
        .into_iter()
        .map(|a| Atom::new(a.location, a.weight / total))
        .collect();
    Measure::from_parts(atoms, vec![]).expect("normalised lattice weights form a measure")
}

struct Outcome {
    measures: Vec<Measure>,
    renormalization: f64,
    spike: bool,
}

fn translate_members(members: &[&Measure], f: &LogConcaveDensity) -> Result<Outcome, TransformError> {
    negative_means(members)?;
    let mean = f.mean();
    if mean.abs() > CENTRED_TOL {
        return Err(TransformError::NotCentered { mean });
    }
    let spread = SPREAD_SIGMAS * f.std_dev();
    let l = members.iter().map(|m| m.support_inf()).fold(f64::INFINITY, f64::min);
    let r = members
        .iter()
        .map(|m| m.support_sup())
        .fold(f64::NEG_INFINITY, f64::max);
    let step = (r - l + 2.0 * spread) / (LATTICE_POINTS - 1) as f64;
    let (ylo, yhi) = f.support();
    if yhi - ylo < 2.0 * step {
        // Narrower than the lattice: the law is a point mass at its mean, 0.
        return Ok(Outcome {
            measures: members.iter().map(|m| (*m).clone()).collect(),
            renormalization: 1.0,
            spike: true,
        });
    }
    let (jlo, w, factor) = lattice_weights(f, step, (-spread, spread))?;
    let x0 = l - spread;
    let pts: Vec<f64> = (0..LATTICE_POINTS).map(|i| x0 + i as f64 * step).collect();
    let measures = members
        .par_iter()
        .map(|m| {
            let p = project(m, &pts);
            let mut z = vec![0.0; pts.len() + w.len()];
            for (i, pi) in p.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                for (j, wj) in w.iter().enumerate() {
                    z[i + j] += pi * wj;
                }
            }
            let atoms = z
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > 0.0)
                .map(|(k, &v)| Atom::new(x0 + (k as i64 + jlo) as f64 * step, v))
                .collect();
            atoms_to_measure(atoms)
        })
        .collect();
    Ok(Outcome {
        measures,
        renormalization: factor,
        spike: false,
    })
}

fn scale_members(members: &[&Measure], f: &PositiveDensity) -> Result<Outcome, TransformError> {
    negative_means(members)?;
    let g = f.log_variable();
    let (mu, sd) = (g.mean(), g.std_dev());
    let big = members
        .iter()
        .map(|m| m.support_inf().abs().max(m.support_sup().abs()))
        .fold(0.0, f64::max);
    let side = (LATTICE_POINTS - 1) / 2;
    let eta = ((1.0 + 1e-9) / GEOMETRIC_RANGE).ln() / (side - 1) as f64;
    let (ulo, uhi) = g.support();
    if uhi - ulo < 2.0 * eta {
        let c = f.mean();
        return Ok(Outcome {
            measures: members
                .iter()
                .map(|m| m.scale(c).expect("positive mean of a positive density"))
                .collect(),
            renormalization: 1.0,
            spike: true,
        });
    }
    let spread = SPREAD_SIGMAS * sd;
    let (jlo, w, factor) = lattice_weights(g, eta, (mu - spread, mu + spread))?;
    let x_min = big * GEOMETRIC_RANGE;
    let magnitude = |k: i64| x_min * (k as f64 * eta).exp();
    let mut pts: Vec<f64> = (0..side).rev().map(|i| -magnitude(i as i64)).collect();
    pts.push(0.0);
    pts.extend((0..side).map(|i| magnitude(i as i64)));

    let measures = members
        .par_iter()
        .map(|m| {
            let p = project(m, &pts);
            // Index (sign, k) holds magnitude(k + jlo); k = i + j.
            let mut neg = vec![0.0; side + w.len()];
            let mut pos = vec![0.0; side + w.len()];
            for (i, pi) in p[side + 1..].iter().enumerate() {
                w.iter().enumerate().for_each(|(j, wj)| pos[i + j] += pi * wj);
            }
            for (i, pi) in p[..side].iter().rev().enumerate() {
                w.iter().enumerate().for_each(|(j, wj)| neg[i + j] += pi * wj);
            }
            let mut atoms = vec![Atom::new(0.0, p[side])];
            for (sign, table) in [(-1.0, &neg), (1.0, &pos)] {
                atoms.extend(
                    table
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v > 0.0)
                        .map(|(k, &v)| Atom::new(sign * magnitude(k as i64 + jlo), v)),
                );
            }
            atoms_to_measure(atoms)
        })
        .collect();
    Ok(Outcome {
        measures,
        renormalization: factor,
        spike: false,
    })
}

fn translate_provenance(f: &LogConcaveDensity, out: &Outcome) -> Provenance {
    Provenance {
        transform: "random-translate".into(),
        params: json!({
            "density_sd": f.std_dev(),
            "density_support": f.support(),
            "lattice_points": LATTICE_POINTS,
            "spike": out.spike,
        }),
        renormalization: Some(out.renormalization),
    }
}

fn scale_provenance(f: &PositiveDensity, out: &Outcome) -> Provenance {
    Provenance {
        transform: "scale-mix".into(),
        params: json!({
            "density_mean": f.mean(),
            "log_sd": f.log_variable().std_dev(),
            "lattice_points": 2 * ((LATTICE_POINTS - 1) / 2) + 1,
            "spike": out.spike,
        }),
        renormalization: Some(out.renormalization),
    }
}

/// Law of `X + Y` for `X ~ m` and independent centred log-concave `Y ~ f`.
pub fn random_translate(m: &Measure, f: &LogConcaveDensity) -> Result<Transformed, TransformError> {
    let mut out = translate_members(&[m], f)?;
    Ok(Transformed {
        provenance: translate_provenance(f, &out),
        measure: out.measures.pop().expect("one member"),
    })
}

/// [`random_translate`] applied with the same `Y` to every member.
pub fn random_translate_family(
    fam: &MeasureFamily,
    f: &LogConcaveDensity,
) -> Result<TransformedFamily, TransformError> {
    let members: Vec<&Measure> = fam.measures().collect();
    let out = translate_members(&members, f)?;
    Ok(TransformedFamily {
        provenance: translate_provenance(f, &out),
        family: rebuild(fam, out.measures),
    })
}

/// Law of `Y X` for `X ~ m` and independent positive `Y ~ f`.
pub fn scale_mix(m: &Measure, f: &PositiveDensity) -> Result<Transformed, TransformError> {
    let mut out = scale_members(&[m], f)?;
    Ok(Transformed {
        provenance: scale_provenance(f, &out),
        measure: out.measures.pop().expect("one member"),
    })
}

/// [`scale_mix`] applied with the same `Y` to every member.
pub fn scale_mix_family(fam: &MeasureFamily, f: &PositiveDensity) -> Result<TransformedFamily, TransformError> {
    let members: Vec<&Measure> = fam.measures().collect();
    let out = scale_members(&members, f)?;
    Ok(TransformedFamily {
        provenance: scale_provenance(f, &out),
        family: rebuild(fam, out.measures),
    })
}

fn rebuild(fam: &MeasureFamily, measures: Vec<Measure>) -> MeasureFamily {
    let entries = fam.times().into_iter().zip(measures).collect();
    MeasureFamily::new(entries).expect("time grid unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_sim::{empirical_distance, Metric};

    fn two_point() -> Measure {
        Measure::discrete(&[(-2.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn projection_is_barycentric() {
        let m = Measure::discrete(&[(-0.25, 0.5), (1.0, 0.5)]).unwrap();
        let w = project(&m, &[-1.0, 0.0, 1.0]);
        assert_eq!(w, vec![0.125, 0.375, 0.5]);
        let uniform = Measure::new(vec![], vec![crate::measures::Segment::new(0.0, 2.0, vec![0.5])]).unwrap();
        let w = project(&uniform, &[0.0, 1.0, 2.0]);
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15 && (w[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spikes_are_identities() {
        let m = two_point();
        let out = random_translate(&m, &LogConcaveDensity::spike(0.0, 1e-6).unwrap()).unwrap();
        assert_eq!(out.measure, m);
        assert_eq!(out.provenance.renormalization, Some(1.0));
        let out = scale_mix(&m, &PositiveDensity::spike(1.0, 1e-7).unwrap()).unwrap();
        assert!(empirical_distance(&out.measure, &m, Metric::W1) < 1e-9);
        let out = scale_mix(&m, &PositiveDensity::spike(2.5, 1e-7).unwrap()).unwrap();
        assert!(empirical_distance(&out.measure, &m.scale(2.5).unwrap(), Metric::W1) < 1e-6);
    }

    #[test]
    fn translate_keeps_mean_and_adds_variance() {
        let m = two_point();
        let f = LogConcaveDensity::triangular(1.0, 200).unwrap();
        let out = random_translate(&m, &f).unwrap();
        let z = &out.measure;
        assert!((z.mean() - m.mean()).abs() < 1e-9, "{}", z.mean());
        // Var(X + Y) = Var X + Var Y, up to the projection's h^2 / 4.
        let expected = m.variance() + 1.0 / 6.0;
        assert!((z.variance() - expected).abs() < 1e-4, "{} vs {expected}", z.variance());
        assert!((out.provenance.renormalization.unwrap() - 1.0).abs() < 1e-3);
        assert!(matches!(
            random_translate(
                &m,
                &LogConcaveDensity::from_density(vec![0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap()
            ),
            Err(TransformError::NotCentered { .. })
        ));
        assert!(matches!(
            random_translate(&Measure::dirac(0.5), &f),
            Err(TransformError::NonNegativeMean { .. })
        ));
    }

    #[test]
    fn scale_mix_scales_mean() {
        let m = two_point();
        let f = PositiveDensity::lognormal(0.0, 0.2, 400).unwrap();
        let out = scale_mix(&m, &f).unwrap();
        let expected = m.mean() * f.mean();
        assert!(
            (out.measure.mean() - expected).abs() < 1e-3,
            "{} vs {expected}",
            out.measure.mean()
        );
    }
}
