//! Exact finite probability measures on the real line: weighted atoms plus
//! piecewise-polynomial density segments with bounded support.
//!
//! All survival-type quantities use the closed right tail `[x, +inf)`, so an
//! atom located exactly at `x` is counted. Every functional (survival, tail
//! first moment, integrated survival, quantile) is computed exactly from the
//! polynomial antiderivatives through a suffix-sum table built once at
//! construction, so evaluation is `O(log n)` in the number of pieces.

mod family;
pub mod io;

pub use family::{FamilyError, MeasureFamily};

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::poly::Poly;

/// Maximum polynomial degree accepted on a density segment.
pub const MAX_DEGREE: usize = 8;
/// Tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Atoms closer than this are merged.
pub const ATOM_MERGE_TOLERANCE: f64 = 1e-12;
/// Interior sample count used to check segment non-negativity.
const DENSITY_PROBES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: f64, weight: f64) -> Self {
        Atom { location, weight }
    }
}

/// Density `sum_j coeffs[j] * y^j` on `[lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub lower: f64,
    pub upper: f64,
    pub density: Poly,
}

impl Segment {
    pub fn new(lower: f64, upper: f64, coeffs: Vec<f64>) -> Self {
        Segment {
            lower,
            upper,
            density: Poly::new(coeffs),
        }
    }

    pub fn with_poly(lower: f64, upper: f64, density: Poly) -> Self {
        Segment { lower, upper, density }
    }

    pub fn mass(&self) -> f64 {
        self.density.integral(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MassNotOne { mass: f64 },
    NegativeDensity { segment: usize, at: f64, value: f64 },
    OverlappingSegments { first: usize, second: usize },
    UnsortedAtoms { index: usize },
    WeightOutOfRange { index: usize, weight: f64 },
    EmptySegment { segment: usize },
    DegreeTooHigh { segment: usize, degree: usize },
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MassNotOne { mass } => write!(f, "MassNotOne: total mass {mass}"),
            Violation::NegativeDensity { segment, at, value } => {
                write!(f, "NegativeDensity: segment {segment} has density {value} at {at}")
            }
            Violation::OverlappingSegments { first, second } => {
                write!(f, "OverlappingSegments: segments {first} and {second}")
            }
            Violation::UnsortedAtoms { index } => {
                write!(f, "UnsortedAtoms: atom {index} is not strictly after its predecessor")
            }
            Violation::WeightOutOfRange { index, weight } => {
                write!(f, "WeightOutOfRange: atom {index} has weight {weight}")
            }
            Violation::EmptySegment { segment } => {
                write!(f, "EmptySegment: segment {segment} has lower >= upper")
            }
            Violation::DegreeTooHigh { segment, degree } => {
                write!(f, "DegreeTooHigh: segment {segment} has degree {degree} > {MAX_DEGREE}")
            }
            Violation::NonFinite => write!(f, "NonFinite: a location, weight or coefficient is not finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid measure: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
    #[error("cannot build an empirical measure from an empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
    #[error("scale factor must be positive and finite, got {0}")]
    BadScale(f64),
}

/// Checks every measure invariant and collects all violations.
pub fn validate(atoms: &[Atom], segments: &[Segment]) -> Result<(), ValidationReport> {
    let mut violations = Vec::new();

    let finite = atoms.iter().all(|a| a.location.is_finite() && a.weight.is_finite())
        && segments
            .iter()
            .all(|s| s.lower.is_finite() && s.upper.is_finite() && s.density.coeffs().iter().all(|c| c.is_finite()));
    if !finite {
        return Err(ValidationReport {
            violations: vec![Violation::NonFinite],
        });
    }

    for (i, a) in atoms.iter().enumerate() {
        if !(a.weight > 0.0 && a.weight <= 1.0 + MASS_TOLERANCE) {
            violations.push(Violation::WeightOutOfRange {
                index: i,
                weight: a.weight,
            });
        }
        if i > 0 && atoms[i - 1].location >= a.location {
            violations.push(Violation::UnsortedAtoms { index: i });
        }
    }

    for (i, s) in segments.iter().enumerate() {
        if s.lower >= s.upper {
            violations.push(Violation::EmptySegment { segment: i });
            continue;
        }
        if s.density.degree() > MAX_DEGREE {
            violations.push(Violation::DegreeTooHigh {
                segment: i,
                degree: s.density.degree(),
            });
        }
        let width = s.upper - s.lower;
        let scale = s
            .density
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| c.abs() * s.lower.abs().max(s.upper.abs()).powi(j as i32))
            .fold(0.0_f64, f64::max);
        let floor = -1e-12 * scale.max(1.0);
        for k in 0..=DENSITY_PROBES + 1 {
            let y = s.lower + width * k as f64 / (DENSITY_PROBES + 1) as f64;
            let v = s.density.eval(y);
            if v < floor {
                violations.push(Violation::NegativeDensity {
                    segment: i,
                    at: y,
                    value: v,
                });
                break;
            }
        }
        if i > 0 && segments[i - 1].upper > s.lower {
            violations.push(Violation::OverlappingSegments {
                first: i - 1,
                second: i,
            });
        }
    }

    let mass: f64 = atoms.iter().map(|a| a.weight).sum::<f64>() + segments.iter().map(Segment::mass).sum::<f64>();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        violations.push(Violation::MassNotOne { mass });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { violations })
    }
}

#[derive(Debug, Clone)]
enum Piece {
    Atom {
        x: f64,
        w: f64,
    },
    Seg {
        lo: f64,
        hi: f64,
        density: Poly,
        moment_density: Poly,
    },
}

impl Piece {
    fn mass(&self) -> f64 {
        match self {
            Piece::Atom { w, .. } => *w,
            Piece::Seg { lo, hi, density, .. } => density.integral(*lo, *hi),
        }
    }

    fn first_moment(&self) -> f64 {
        match self {
            Piece::Atom { x, w } => x * w,
            Piece::Seg {
                lo, hi, moment_density, ..
            } => moment_density.integral(*lo, *hi),
        }
    }

    /// Whether any part of the piece lies in `[x, inf)` (or `(x, inf)` if `open`).
    fn reaches(&self, x: f64, open: bool) -> bool {
        match self {
            Piece::Atom { x: a, .. } => {
                if open {
                    *a > x
                } else {
                    *a >= x
                }
            }
            Piece::Seg { hi, .. } => *hi > x,
        }
    }
}

/// Suffix sums of mass and first moment over the pieces in location order.
#[derive(Debug, Clone)]
struct TailTable {
    pieces: Vec<Piece>,
    suffix_mass: Vec<f64>,
    suffix_moment: Vec<f64>,
    prefix_mass: Vec<f64>,
    prefix_moment: Vec<f64>,
}

impl TailTable {
    fn build(atoms: &[Atom], segments: &[Segment]) -> Self {
        let mut pieces: Vec<(f64, u8, Piece)> = Vec::new();
        for a in atoms {
            pieces.push((
                a.location,
                1,
                Piece::Atom {
                    x: a.location,
                    w: a.weight,
                },
            ));
        }
        for s in segments {
            // Split at interior atoms so pieces never overlap.
            let mut cuts: Vec<f64> = atoms
                .iter()
                .map(|a| a.location)
                .filter(|&x| x > s.lower && x < s.upper)
                .collect();
            cuts.insert(0, s.lower);
            cuts.push(s.upper);
            for w in cuts.windows(2) {
                pieces.push((
                    w[0],
                    2,
                    Piece::Seg {
                        lo: w[0],
                        hi: w[1],
                        density: s.density.clone(),
                        moment_density: s.density.mul_y(),
                    },
                ));
            }
        }
        // Pieces are keyed by their left end; an atom at `a` precedes the
        // segment starting at `a`.
        pieces.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let pieces: Vec<Piece> = pieces.into_iter().map(|p| p.2).collect();

        let n = pieces.len();
        let mut suffix_mass = vec![0.0; n + 1];
        let mut suffix_moment = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix_mass[i] = suffix_mass[i + 1] + pieces[i].mass();
            suffix_moment[i] = suffix_moment[i + 1] + pieces[i].first_moment();
        }
        let mut prefix_mass = vec![0.0; n + 1];
        let mut prefix_moment = vec![0.0; n + 1];
        for i in 0..n {
            prefix_mass[i + 1] = prefix_mass[i] + pieces[i].mass();
            prefix_moment[i + 1] = prefix_moment[i] + pieces[i].first_moment();
        }
        TailTable {
            pieces,
            suffix_mass,
            suffix_moment,
            prefix_mass,
            prefix_moment,
        }
    }

    /// `(mu(T), int_T y mu(dy))` for `T = [x, inf)` or `(x, inf)`.
    fn tail(&self, x: f64, open: bool) -> (f64, f64) {
        let i = self.pieces.partition_point(|p| !p.reaches(x, open));
        if i == self.pieces.len() {
            return (0.0, 0.0);
        }
        match &self.pieces[i] {
            Piece::Seg {
                lo,
                hi,
                density,
                moment_density,
            } if *lo < x => (
                density.integral(x, *hi) + self.suffix_mass[i + 1],
                moment_density.integral(x, *hi) + self.suffix_moment[i + 1],
            ),
            _ => (self.suffix_mass[i], self.suffix_moment[i]),
        }
    }

    /// `(mu(H), int_H y mu(dy))` for `H = (-inf, x)`.
    fn head_open(&self, x: f64) -> (f64, f64) {
        let i = self.pieces.partition_point(|p| !p.reaches(x, false));
        if i == self.pieces.len() {
            return (self.prefix_mass[i], self.prefix_moment[i]);
        }
        match &self.pieces[i] {
            Piece::Seg {
                lo,
                density,
                moment_density,
                ..
            } if *lo < x => (
                self.prefix_mass[i] + density.integral(*lo, x),
                self.prefix_moment[i] + moment_density.integral(*lo, x),
            ),
            _ => (self.prefix_mass[i], self.prefix_moment[i]),
        }
    }
}

/// An exact, validated, immutable probability measure.
#[derive(Debug, Clone)]
pub struct Measure {
    atoms: Vec<Atom>,
    segments: Vec<Segment>,
    table: TailTable,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.segments == other.segments
    }
}

impl Measure {
    /// Builds a measure from parts that must already satisfy every invariant.
    pub fn new(atoms: Vec<Atom>, segments: Vec<Segment>) -> Result<Self, ValidationReport> {
        validate(&atoms, &segments)?;
        let table = TailTable::build(&atoms, &segments);
        Ok(Measure { atoms, segments, table })
    }

    /// Sorts atoms, merges near-duplicates, drops zero weights, and sums
    /// overlapping segments before validating.
    pub fn from_parts(atoms: Vec<Atom>, segments: Vec<Segment>) -> Result<Self, ValidationReport> {
        Measure::new(normalize_atoms(atoms), normalize_segments(segments))
    }

    pub fn dirac(x: f64) -> Self {
        Measure::new(vec![Atom::new(x, 1.0)], vec![]).expect("finite point mass is valid")
    }

    /// Atomic measure from `(location, weight)` pairs in any order.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self, ValidationReport> {
        Measure::from_parts(points.iter().map(|&(x, w)| Atom::new(x, w)).collect(), vec![])
    }

    /// Equal-weight atomic measure on the sample, duplicates merged.
    pub fn from_samples(xs: &[f64]) -> Result<Self, MeasureError> {
        if xs.is_empty() {
            return Err(MeasureError::EmptySample);
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(MeasureError::NonFiniteSample);
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut atoms: Vec<Atom> = Vec::new();
        let mut count = 0usize;
        let mut current = sorted[0];
        for &x in &sorted {
            if x - current >= ATOM_MERGE_TOLERANCE {
                atoms.push(Atom::new(current, count as f64 / n));
                current = x;
                count = 0;
            }
            count += 1;
        }
        atoms.push(Atom::new(current, count as f64 / n));
        Ok(Measure::new(atoms, vec![])?)
    }

    /// Exact mixture `sum_i w_i mu_i`; the weights must sum to one.
    pub fn mixture(components: &[(f64, &Measure)]) -> Result<Self, ValidationReport> {
        let mut atoms = Vec::new();
        let mut segments = Vec::new();
        for &(w, m) in components {
            if w == 0.0 {
                continue;
            }
            atoms.extend(m.atoms.iter().map(|a| Atom::new(a.location, a.weight * w)));
            segments.extend(
                m.segments
                    .iter()
                    .map(|s| Segment::with_poly(s.lower, s.upper, s.density.scale(w))),
            );
        }
        Measure::from_parts(atoms, segments)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_atomic(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.table.suffix_mass[0]
    }

    pub fn mean(&self) -> f64 {
        self.table.suffix_moment[0]
    }

    /// `mu([x, +inf))`.
    pub fn survival_from(&self, x: f64) -> f64 {
        self.table.tail(x, false).0
    }

    /// `mu((x, +inf))`.
    pub fn survival_after(&self, x: f64) -> f64 {
        self.table.tail(x, true).0
    }

    /// `F(x) = mu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        (self.total_mass() - self.survival_after(x)).clamp(0.0, 1.0)
    }

    /// `(mu([x, inf)), int_[x, inf) y mu(dy))`.
    pub fn tail(&self, x: f64) -> (f64, f64) {
        self.table.tail(x, false)
    }

    /// `(mu((x, inf)), int_(x, inf) y mu(dy))`.
    pub fn tail_open(&self, x: f64) -> (f64, f64) {
        self.table.tail(x, true)
    }

    /// `C(x) = int_[x, inf) (y - x) mu(dy)`.
    pub fn integrated_survival(&self, x: f64) -> f64 {
        let (mass, moment) = self.table.tail(x, false);
        if mass == 0.0 {
            return 0.0;
        }
        (moment - x * mass).max(0.0)
    }

    /// `int (x - y)^+ mu(dy)`, computed from the left tail.
    pub fn put_value(&self, x: f64) -> f64 {
        let (mass, moment) = self.table.head_open(x);
        (x * mass - moment).max(0.0)
    }

    /// `r_mu`, the supremum of the support.
    pub fn support_sup(&self) -> f64 {
        let a = self.atoms.last().map(|a| a.location).unwrap_or(f64::NEG_INFINITY);
        let s = self
            .segments
            .iter()
            .rev()
            .find(|s| s.mass() > 0.0)
            .map(|s| s.upper)
            .unwrap_or(f64::NEG_INFINITY);
        a.max(s)
    }

    /// `l_mu`, the infimum of the support.
    pub fn support_inf(&self) -> f64 {
        let a = self.atoms.first().map(|a| a.location).unwrap_or(f64::INFINITY);
        let s = self
            .segments
            .iter()
            .find(|s| s.mass() > 0.0)
            .map(|s| s.lower)
            .unwrap_or(f64::INFINITY);
        a.min(s)
    }

    /// Atom locations and segment endpoints, sorted and deduplicated.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.atoms.iter().map(|a| a.location).collect();
        for s in &self.segments {
            k.push(s.lower);
            k.push(s.upper);
        }
        sort_dedup(&mut k);
        k
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * (a.location - m).powi(2)).sum();
        let segs: f64 = self
            .segments
            .iter()
            .map(|s| {
                let centered = s.density.shifted(-m);
                // int (y-m)^2 p(y) dy over [lo, hi] = int z^2 p(z+m) dz over [lo-m, hi-m]
                centered.mul_y().mul_y().integral(s.lower - m, s.upper - m)
            })
            .sum();
        atoms + segs
    }

    /// Lower quantile `inf { x : F(x) >= p }`; `-inf` for `p <= 0`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t = &self.table;
        let n = t.pieces.len();
        let i = t.prefix_mass[1..].partition_point(|&m| m < p).min(n - 1);
        match &t.pieces[i] {
            Piece::Atom { x, .. } => *x,
            Piece::Seg { lo, hi, density, .. } => {
                let target = p - t.prefix_mass[i];
                let anti = density.antiderivative();
                let base = anti.eval(*lo);
                let (mut a, mut b) = (*lo, *hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if anti.eval(mid) - base >= target {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                b
            }
        }
    }

    /// `inf { x : mu((x, inf)) <= q }`, the lower quantile at level `1 - q`
    /// computed from the right tail so that small `q` keep full precision.
    /// `-inf` for `q >= 1`.
    pub fn tail_quantile(&self, q: f64) -> f64 {
        let t = &self.table;
        if q >= t.suffix_mass[0] {
            return f64::NEG_INFINITY;
        }
        let n = t.pieces.len();
        let i = t.suffix_mass[1..].partition_point(|&m| m > q).min(n - 1);
        match &t.pieces[i] {
            Piece::Atom { x, .. } => *x,
            Piece::Seg { lo, hi, density, .. } => {
                let target = q - t.suffix_mass[i + 1];
                let anti = density.antiderivative();
                let top = anti.eval(*hi);
                let (mut a, mut b) = (*lo, *hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if top - anti.eval(mid) <= target {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                b
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        self.quantile(u * self.total_mass())
    }

    /// Pushforward under `y -> -y`.
    pub fn reflect(&self) -> Measure {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .rev()
            .map(|a| Atom::new(-a.location, a.weight))
            .collect();
        let segments: Vec<Segment> = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment::with_poly(-s.upper, -s.lower, s.density.reflected()))
            .collect();
        Measure::new(atoms, segments).expect("reflection preserves validity")
    }

    /// Pushforward under `y -> y + c`.
    pub fn translate(&self, c: f64) -> Measure {
        let atoms = self.atoms.iter().map(|a| Atom::new(a.location + c, a.weight)).collect();
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::with_poly(s.lower + c, s.upper + c, s.density.shifted(c)))
            .collect();
        Measure::from_parts(atoms, segments).expect("translation preserves validity")
    }

    /// Pushforward under `y -> s * y` for `s > 0`.
    pub fn scale(&self, s: f64) -> Result<Measure, MeasureError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(MeasureError::BadScale(s));
        }
        let atoms = self.atoms.iter().map(|a| Atom::new(a.location * s, a.weight)).collect();
        let segments = self
            .segments
            .iter()
            .map(|seg| Segment::with_poly(seg.lower * s, seg.upper * s, seg.density.dilated(s)))
            .collect();
        Ok(Measure::from_parts(atoms, segments)?)
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

fn normalize_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.retain(|a| a.weight != 0.0);
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if (a.location - last.location).abs() < ATOM_MERGE_TOLERANCE => {
                last.weight += a.weight;
            }
            _ => out.push(a),
        }
    }
    out
}

/// Splits overlapping segments at every breakpoint and sums the densities.
fn normalize_segments(segments: Vec<Segment>) -> Vec<Segment> {
    let mut segments: Vec<Segment> = segments.into_iter().filter(|s| !s.density.is_zero()).collect();
    if segments.len() <= 1 {
        return segments;
    }
    segments.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    let disjoint = segments.windows(2).all(|w| w[0].upper <= w[1].lower);
    if disjoint {
        return segments;
    }
    let mut cuts: Vec<f64> = segments.iter().flat_map(|s| [s.lower, s.upper]).collect();
    sort_dedup(&mut cuts);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut acc = Poly::zero();
        let mut covered = false;
        for s in segments.iter().filter(|s| s.lower <= a && s.upper >= b) {
            acc = &acc + &s.density;
            covered = true;
        }
        if covered && !acc.is_zero() {
            out.push(Segment::with_poly(a, b, acc));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_atom() -> Measure {
        Measure::discrete(&[(-2.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&two_atom().atoms, &[]).is_ok());
        let err = validate(&[Atom::new(-2.0, 0.5)], &[]).unwrap_err();
        assert!(matches!(err.violations[0], Violation::MassNotOne { .. }));
        let err = validate(&[], &[Segment::new(0.0, 1.0, vec![-1.0])]).unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeDensity { .. })));
        let err = validate(&[Atom::new(1.0, 0.5), Atom::new(-1.0, 0.5)], &[]).unwrap_err();
        assert!(matches!(err.violations[0], Violation::UnsortedAtoms { .. }));
        let err = validate(
            &[],
            &[Segment::new(0.0, 1.0, vec![0.5]), Segment::new(0.5, 1.5, vec![0.5])],
        )
        .unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, Violation::OverlappingSegments { .. })));
    }

    #[test]
    fn atom_at_segment_start() {
        let m = Measure::new(
            vec![Atom::new(0.25, 0.25)],
            vec![
                Segment::new(-1.0, -0.5, vec![0.5]),
                Segment::new(0.25, 1.0, vec![2.0 / 3.0]),
            ],
        )
        .unwrap();
        for (x, open, mass) in [
            (0.5, false, 1.0 / 3.0),
            (0.25, false, 0.75),
            (0.25, true, 0.5),
            (-0.75, false, 0.875),
        ] {
            let got = if open { m.tail_open(x).0 } else { m.tail(x).0 };
            assert!((got - mass).abs() < 1e-15, "x = {x}: {got}");
        }
    }

    #[test]
    fn mean_examples() {
        assert_eq!(two_atom().mean(), -0.5);
        assert_eq!(Measure::dirac(-3.0).mean(), -3.0);
    }

    #[test]
    fn survival_closed_interval() {
        let m = two_atom();
        assert_eq!(m.survival_from(-2.0), 1.0);
        assert_eq!(m.survival_from(2.0), 0.0);
        assert_eq!(m.survival_after(-2.0), 0.5);
    }

    #[test]
    fn integrated_survival_examples() {
        let m = two_atom();
        assert!((m.integrated_survival(0.0) - 0.5).abs() < 1e-15);
        assert!((m.integrated_survival(-3.0) - 2.5).abs() < 1e-15);
        assert_eq!(m.integrated_survival(1.5), 0.0);
    }

    #[test]
    fn support_bounds() {
        let m = two_atom();
        assert_eq!((m.support_inf(), m.support_sup()), (-2.0, 1.0));
        let d = Measure::dirac(-0.7);
        assert_eq!((d.support_inf(), d.support_sup()), (-0.7, -0.7));
    }

    #[test]
    fn reflect_and_translate() {
        let m = two_atom();
        let r = m.reflect();
        assert_eq!(r.atoms(), &[Atom::new(-1.0, 0.5), Atom::new(2.0, 0.5)]);
        assert_eq!(r.reflect(), m);
        let t = m.translate(-1.0);
        assert_eq!(t.atoms()[0].location, -3.0);
        assert_eq!(t.mean(), -1.5);
    }

    #[test]
    fn samples_merge_duplicates() {
        let m = Measure::from_samples(&[1.0, 1.0, -2.0, -2.0]).unwrap();
        assert_eq!(m, two_atom());
        assert_eq!(Measure::from_samples(&[0.0]).unwrap(), Measure::dirac(0.0));
        assert_eq!(Measure::from_samples(&[]), Err(MeasureError::EmptySample));
    }

    #[test]
    fn sampled_weights_match_binomial_error() {
        let m = two_atom();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..100_000).map(|_| m.sample(&mut rng)).collect();
        let emp = Measure::from_samples(&xs).unwrap();
        assert_eq!(emp.atoms().len(), 2);
        let bound = 4.0 * (0.25_f64 / 1e5).sqrt();
        for a in emp.atoms() {
            assert!((a.weight - 0.5).abs() <= bound, "{a:?}");
        }
    }

    #[test]
    fn segment_functionals() {
        // Uniform on [0, 2) plus nothing else.
        let m = Measure::new(vec![], vec![Segment::new(0.0, 2.0, vec![0.5])]).unwrap();
        assert!((m.mean() - 1.0).abs() < 1e-15);
        assert!((m.survival_from(0.5) - 0.75).abs() < 1e-15);
        // C(x) = (2 - x)^2 / 4
        assert!((m.integrated_survival(1.0) - 0.25).abs() < 1e-15);
        assert!((m.quantile(0.3) - 0.6).abs() < 1e-12);
        assert!((m.variance() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn atom_inside_segment() {
        let m = Measure::new(vec![Atom::new(0.5, 0.5)], vec![Segment::new(0.0, 1.0, vec![0.5])]).unwrap();
        assert!((m.survival_from(0.5) - 0.75).abs() < 1e-15);
        assert!((m.survival_after(0.5) - 0.25).abs() < 1e-15);
        assert!((m.mean() - 0.5).abs() < 1e-15);
        assert_eq!(m.quantile(0.25), 0.5);
        assert!(m.quantile(0.2) < 0.5);
    }

    #[test]
    fn mixture_sums_overlapping_segments() {
        let a = Measure::new(vec![], vec![Segment::new(0.0, 2.0, vec![0.5])]).unwrap();
        let b = Measure::new(vec![], vec![Segment::new(1.0, 3.0, vec![0.5])]).unwrap();
        let mix = Measure::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert_eq!(mix.segments().len(), 3);
        assert!((mix.mean() - 1.5).abs() < 1e-15);
        assert!((mix.total_mass() - 1.0).abs() < 1e-15);
    }

    fn arb_measure() -> impl Strategy<Value = Measure> {
        (
            prop::collection::vec((-5.0f64..5.0, 0.05f64..1.0), 1..5),
            prop::option::of((-4.0f64..3.0, 0.1f64..3.0, 0.0f64..2.0, 0.05f64..0.9)),
        )
            .prop_map(|(pts, seg)| {
                let total: f64 = pts.iter().map(|p| p.1).sum();
                let seg_mass = seg.map(|s| s.3).unwrap_or(0.0);
                let atoms: Vec<Atom> = pts
                    .iter()
                    .map(|&(x, w)| Atom::new(x, w / total * (1.0 - seg_mass)))
                    .collect();
                let segments = match seg {
                    Some((lo, width, slope, mass)) => {
                        // density c0 + c1 (y - lo) normalized to `mass`
                        let raw = Poly::new(vec![1.0, slope]).shifted(lo);
                        let z = raw.integral(lo, lo + width);
                        vec![Segment::with_poly(lo, lo + width, raw.scale(mass / z))]
                    }
                    None => vec![],
                };
                Measure::from_parts(atoms, segments).unwrap()
            })
    }

    proptest! {
        #[test]
        fn integrated_survival_properties(m in arb_measure(), xs in prop::collection::vec(-8.0f64..8.0, 3)) {
            let (l, r, mean) = (m.support_inf(), m.support_sup(), m.mean());
            prop_assert!((m.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
            for &x in &xs {
                prop_assert!(m.integrated_survival(x) >= 0.0);
                // put-call parity
                let lhs = m.put_value(x) - m.integrated_survival(x);
                prop_assert!((lhs - (x - mean)).abs() <= 1e-12 * (1.0 + x.abs()), "{} vs {}", lhs, x - mean);
            }
            let mut s = xs.clone();
            s.sort_by(f64::total_cmp);
            let mid = 0.5 * (s[0] + s[2]);
            prop_assert!(m.integrated_survival(mid) <= 0.5 * (m.integrated_survival(s[0]) + m.integrated_survival(s[2])) + 1e-12);
            prop_assert_eq!(m.integrated_survival(r + 0.1), 0.0);
            prop_assert_eq!(m.integrated_survival(r), 0.0);
            let far = l - 1.0;
            prop_assert!((m.integrated_survival(far) + far - mean).abs() <= 1e-9);
        }

        #[test]
        fn transforms_preserve_mass_and_shift_mean(m in arb_measure(), c in -3.0f64..3.0) {
            let t = m.translate(c);
            prop_assert!((t.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
            prop_assert!((t.mean() - (m.mean() + c)).abs() <= 1e-12 * (1.0 + m.mean().abs() + c.abs()) * 10.0);
            let r = m.reflect();
            prop_assert!((r.mean() + m.mean()).abs() <= 1e-12);
            prop_assert_eq!(r.reflect(), m);
        }

        #[test]
        fn survival_jump_equals_atom_weight(m in arb_measure()) {
            for a in m.atoms() {
                let jump = m.survival_from(a.location) - m.survival_after(a.location);
                prop_assert!((jump - a.weight).abs() <= 1e-12);
            }
        }

        #[test]
        fn quantiles_agree(m in arb_measure(), p in 0.001f64..0.999) {
            let lower = m.quantile(p);
            let tail = m.tail_quantile(1.0 - p);
            prop_assert!((lower - tail).abs() <= 1e-9 * (1.0 + lower.abs()), "{} vs {}", lower, tail);
            prop_assert!(m.cdf(lower) >= p - 1e-12);
            prop_assert!(m.survival_after(tail) <= 1.0 - p + 1e-12);
        }
    }
}
