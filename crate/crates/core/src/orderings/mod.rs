//! Pointwise ordering functionals (`Psi^wds`, `Psi^mrl`, `Psi^wis`, `K`) and
//! decision procedures for the stochastic orders on measure families.
//!
//! The WDS order is decided through two independent routes that must agree:
//! the pointwise comparison of `Psi^wds` and total positivity of order two
//! of `K(t, x) = C_t(x) - m_t` on the time-by-grid tabulation. A disagreement
//! is reported as inconclusive, never resolved silently.

mod tp2;

pub use tp2::{
    interpolation_decomposition, tp2_check_grid, InterpolationCase, MinorDecomposition, Tabulation, Tp2Error,
    Tp2Report, Tp2Route, Tp2Violation,
};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{sort_dedup, Measure, MeasureFamily};

/// Default relative tolerance for every comparison.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Interior refinement points inserted in every gap between knots.
pub const REFINEMENT_POINTS: usize = 32;
/// Offsets of the far-left probes below the smallest support infimum.
pub const FAR_LEFT_PROBES: [f64; 3] = [1.0, 10.0, 100.0];

/// A real number or `+inf`. Only comparisons are defined on the infinite
/// value; arithmetic is done on the finite payload explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtendedReal {
    Finite(f64),
    #[serde(with = "pos_inf")]
    PosInf,
}

mod pos_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("+inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "+inf" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("expected \"+inf\""))
        }
    }
}

impl ExtendedReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedReal::PosInf)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(*x),
            ExtendedReal::PosInf => None,
        }
    }

    /// `f64` view with `+inf` mapped to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtendedReal::PosInf, ExtendedReal::PosInf) => Some(Ordering::Equal),
            (ExtendedReal::PosInf, _) => Some(Ordering::Greater),
            (_, ExtendedReal::PosInf) => Some(Ordering::Less),
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInf => write!(f, "+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    StIncreasing,
    StDecreasing,
    Icx,
    Dcx,
    Mrl,
    Wds,
    Wis,
}

impl Relation {
    pub const ALL: [Relation; 7] = [
        Relation::StIncreasing,
        Relation::StDecreasing,
        Relation::Icx,
        Relation::Dcx,
        Relation::Mrl,
        Relation::Wds,
        Relation::Wis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Relation::StIncreasing => "st-increasing",
            Relation::StDecreasing => "st-decreasing",
            Relation::Icx => "icx",
            Relation::Dcx => "dcx",
            Relation::Mrl => "mrl",
            Relation::Wds => "wds",
            Relation::Wis => "wis",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == norm)
            .ok_or_else(|| OrderError::UnknownRelation(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderError {
    #[error("measure mean {0} is not negative")]
    NonNegativeMean(f64),
    #[error("measure mean {0} is not positive")]
    NonPositiveMean(f64),
    #[error("relation {relation} requires {requirement} means (got {mean} at t = {t})")]
    MeanSignViolation {
        relation: Relation,
        requirement: &'static str,
        t: f64,
        mean: f64,
    },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error(transparent)]
    Tp2(#[from] Tp2Error),
}

/// The inequality `lhs <= rhs` required by the relation failed at `x`.
///
/// For increasing relations `lhs` is evaluated on the earlier measure; for
/// `st-decreasing` it is the later survival value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub holds: bool,
    /// Set when the pointwise and TP2 routes disagree (WDS/WIS only).
    pub inconclusive: bool,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tp2: Option<Tp2Report>,
    /// Number of grid points compared per pair.
    pub grid_points: usize,
}

impl OrderVerdict {
    fn holding(relation: Relation, grid_points: usize) -> Self {
        OrderVerdict {
            relation,
            holds: true,
            inconclusive: false,
            witness: None,
            tp2: None,
            grid_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum GridPolicy {
    /// Knots of both measures, refinement points and far-left probes.
    #[default]
    Auto,
    /// A caller-supplied grid; validated against the knots of each pair.
    Explicit(Vec<f64>),
}

fn require_negative_mean(m: &Measure) -> Result<f64, OrderError> {
    let mean = m.mean();
    if mean < 0.0 {
        Ok(mean)
    } else {
        Err(OrderError::NonNegativeMean(mean))
    }
}

/// `K(x) = C(x) - mean`, strictly positive for negative-mean measures.
pub fn k_function(m: &Measure, x: f64) -> Result<f64, OrderError> {
    let mean = require_negative_mean(m)?;
    Ok(m.integrated_survival(x) - mean)
}

/// `Psi^wds(x) = (int_[x,inf) y dmu - mean) / mu([x,inf))` for `x < r`, else `+inf`.
pub fn psi_wds(m: &Measure, x: f64) -> Result<ExtendedReal, OrderError> {
    let mean = require_negative_mean(m)?;
    Ok(psi_wds_unchecked(m, mean, x))
}

fn psi_wds_unchecked(m: &Measure, mean: f64, x: f64) -> ExtendedReal {
    if x >= m.support_sup() {
        return ExtendedReal::PosInf;
    }
    let (mass, moment) = m.tail(x);
    if mass <= 0.0 {
        return ExtendedReal::PosInf;
    }
    ExtendedReal::Finite(((moment - mean) / mass).max(0.0))
}

/// Mean residual life functional: tail conditional mean for `x < r`, else `x`.
pub fn psi_mrl(m: &Measure, x: f64) -> ExtendedReal {
    if x >= m.support_sup() {
        return ExtendedReal::Finite(x);
    }
    let (mass, moment) = m.tail(x);
    if mass <= 0.0 {
        return ExtendedReal::Finite(x);
    }
    ExtendedReal::Finite(moment / mass)
}

/// `Psi^wis(x) = Psi^wds_{reflect(m)}(-x)`.
pub fn psi_wis(m: &Measure, x: f64) -> Result<ExtendedReal, OrderError> {
    let mean = m.mean();
    if mean <= 0.0 {
        return Err(OrderError::NonPositiveMean(mean));
    }
    psi_wds(&m.reflect(), -x)
}

/// Pre-checked evaluator of `Psi^wds` for a fixed measure.
#[derive(Debug, Clone)]
pub struct PsiWds<'a> {
    measure: &'a Measure,
    mean: f64,
}

impl<'a> PsiWds<'a> {
    pub fn new(measure: &'a Measure) -> Result<Self, OrderError> {
        Ok(PsiWds {
            mean: require_negative_mean(measure)?,
            measure,
        })
    }

    pub fn eval(&self, x: f64) -> ExtendedReal {
        psi_wds_unchecked(self.measure, self.mean, x)
    }

    pub fn measure(&self) -> &Measure {
        self.measure
    }
}

/// The comparison grid of the default policy for a set of measures:
/// knots, [`REFINEMENT_POINTS`] per gap, far-left probes and the origin.
pub fn default_grid(measures: &[&Measure]) -> Vec<f64> {
    let mut knots: Vec<f64> = measures.iter().flat_map(|m| m.knots()).collect();
    sort_dedup(&mut knots);
    let mut grid = knots.clone();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in 1..=REFINEMENT_POINTS {
            let x = a + (b - a) * k as f64 / (REFINEMENT_POINTS + 1) as f64;
            if x > a && x < b {
                grid.push(x);
            }
        }
    }
    let lo = knots.first().copied().unwrap_or(0.0);
    grid.extend(FAR_LEFT_PROBES.iter().map(|d| lo - d));
    // The walk starts at the origin, so witnesses there are the most readable.
    grid.push(0.0);
    sort_dedup(&mut grid);
    grid
}

/// Checks that an explicit grid contains every knot and at least two
/// points strictly inside each gap between consecutive knots.
pub fn check_grid(grid: &[f64], measures: &[&Measure]) -> Result<Vec<f64>, OrderError> {
    let mut g = grid.to_vec();
    if g.iter().any(|x| !x.is_finite()) {
        return Err(OrderError::GridTooCoarse("grid contains non-finite points".into()));
    }
    sort_dedup(&mut g);
    let mut knots: Vec<f64> = measures.iter().flat_map(|m| m.knots()).collect();
    sort_dedup(&mut knots);
    for k in &knots {
        if g.binary_search_by(|p| p.total_cmp(k)).is_err() {
            return Err(OrderError::GridTooCoarse(format!("knot {k} missing from grid")));
        }
    }
    for w in knots.windows(2) {
        let inside = g.iter().filter(|&&x| x > w[0] && x < w[1]).count();
        if inside < 2 {
            return Err(OrderError::GridTooCoarse(format!(
                "only {inside} grid points between knots {} and {}",
                w[0], w[1]
            )));
        }
    }
    Ok(g)
}

fn resolve_grid(policy: &GridPolicy, mu: &Measure, nu: &Measure) -> Result<Vec<f64>, OrderError> {
    match policy {
        GridPolicy::Auto => Ok(default_grid(&[mu, nu])),
        GridPolicy::Explicit(g) => check_grid(g, &[mu, nu]),
    }
}

/// Size of the violation `lhs - rhs` beyond tolerance, or `None`.
fn excess(lhs: ExtendedReal, rhs: ExtendedReal, tol: f64) -> Option<f64> {
    match (lhs, rhs) {
        (_, ExtendedReal::PosInf) => None,
        (ExtendedReal::PosInf, ExtendedReal::Finite(_)) => Some(f64::INFINITY),
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => {
            let scale = 1.0_f64.max(a.abs()).max(b.abs());
            (a - b > tol * scale).then_some(a - b)
        }
    }
}

/// Scans the grid for `lhs(x) <= rhs(x)`; returns the largest violation,
/// ties broken towards the smallest `|x|`.
fn pointwise_scan(
    grid: &[f64],
    tol: f64,
    mut eval: impl FnMut(f64) -> (ExtendedReal, ExtendedReal),
) -> Option<(f64, ExtendedReal, ExtendedReal)> {
    let mut best: Option<(f64, f64, ExtendedReal, ExtendedReal)> = None;
    for &x in grid {
        let (lhs, rhs) = eval(x);
        if let Some(v) = excess(lhs, rhs, tol) {
            let better = match &best {
                None => true,
                Some((bv, bx, _, _)) => {
                    let tie = if v.is_infinite() || bv.is_infinite() {
                        v == *bv
                    } else {
                        (v - bv).abs() <= 1e-12 * v.abs().max(bv.abs())
                    };
                    if tie {
                        x.abs() < bx.abs()
                    } else {
                        v > *bv
                    }
                }
            };
            if better {
                best = Some((v, x, lhs, rhs));
            }
        }
    }
    best.map(|(_, x, l, r)| (x, l, r))
}

/// Rounds of local refinement spent on a pair whose routes disagree.
const REFINE_ROUNDS: usize = 4;
const REFINE_POINTS: usize = 64;

fn wds_routes(
    (s, pm): (f64, &PsiWds<'_>),
    (t, pn): (f64, &PsiWds<'_>),
    grid: &[f64],
    tol: f64,
) -> Result<(Option<Witness>, Tp2Report), OrderError> {
    let scan = pointwise_scan(grid, tol, |x| (pm.eval(x), pn.eval(x)));
    let k = |p: &PsiWds<'_>| -> Vec<f64> {
        grid.iter()
            .map(|&x| p.measure.integrated_survival(x) - p.mean)
            .collect()
    };
    let tab = Tabulation {
        rows: vec![s, t],
        cols: grid.to_vec(),
        values: vec![k(pm), k(pn)],
    };
    let report = tp2_check_grid(&tab, tol)?;
    Ok((scan.map(|(x, lhs, rhs)| Witness { s, t, x, lhs, rhs }), report))
}

/// Both routes on the same grid. When they disagree the grid is refined
/// around the flagged location: inside the violating minor's interval, or
/// geometrically towards a pointwise witness from the left (`Psi^wds` sees
/// the left derivative of `log K`).
fn compare_wds(
    (s, mu): (f64, &Measure),
    (t, nu): (f64, &Measure),
    mut grid: Vec<f64>,
    tol: f64,
) -> Result<OrderVerdict, OrderError> {
    let (pm, pn) = (PsiWds::new(mu)?, PsiWds::new(nu)?);
    let (mut witness, mut report) = wds_routes((s, &pm), (t, &pn), &grid, tol)?;
    for _ in 0..REFINE_ROUNDS {
        if witness.is_none() == report.holds {
            break;
        }
        let (lo, hi) = match (&witness, &report.violation) {
            (None, Some(v)) => (v.x, v.y),
            (Some(w), _) => {
                let i = grid.partition_point(|&g| g < w.x);
                (if i > 0 { grid[i - 1] } else { w.x - 1.0 }, w.x)
            }
            (None, None) => unreachable!("routes agree"),
        };
        let width = hi - lo;
        grid.extend((1..REFINE_POINTS).map(|j| lo + width * j as f64 / REFINE_POINTS as f64));
        grid.extend((1..=40).map(|j| hi - width * 0.5f64.powi(j)));
        sort_dedup(&mut grid);
        (witness, report) = wds_routes((s, &pm), (t, &pn), &grid, tol)?;
    }
    Ok(OrderVerdict {
        relation: Relation::Wds,
        holds: witness.is_none() && report.holds,
        inconclusive: witness.is_none() != report.holds,
        witness,
        tp2: Some(report),
        grid_points: grid.len(),
    })
}

/// Decides `relation` between `mu` (time `s`) and `nu` (time `t > s`).
pub fn compare_pair_at(
    relation: Relation,
    (s, mu): (f64, &Measure),
    (t, nu): (f64, &Measure),
    policy: &GridPolicy,
    tol: f64,
) -> Result<OrderVerdict, OrderError> {
    if relation == Relation::Wis {
        for (time, m) in [(s, mu), (t, nu)] {
            if m.mean() <= 0.0 {
                return Err(OrderError::MeanSignViolation {
                    relation,
                    requirement: "positive",
                    t: time,
                    mean: m.mean(),
                });
            }
        }
        let grid = resolve_grid(policy, mu, nu)?;
        let reflected: Vec<f64> = grid.iter().rev().map(|x| -x).collect();
        let (rmu, rnu) = (mu.reflect(), nu.reflect());
        let mut v = compare_pair_at(
            Relation::Wds,
            (s, &rmu),
            (t, &rnu),
            &GridPolicy::Explicit(reflected),
            tol,
        )?;
        v.relation = Relation::Wis;
        if let Some(w) = v.witness.as_mut() {
            w.x = -w.x;
        }
        return Ok(v);
    }

    let grid = resolve_grid(policy, mu, nu)?;
    let n = grid.len();
    let fin = ExtendedReal::Finite;
    let scan = match relation {
        Relation::StIncreasing => pointwise_scan(&grid, tol, |x| (fin(mu.survival_from(x)), fin(nu.survival_from(x)))),
        Relation::StDecreasing => pointwise_scan(&grid, tol, |x| (fin(nu.survival_from(x)), fin(mu.survival_from(x)))),
        Relation::Icx => pointwise_scan(&grid, tol, |x| {
            (fin(mu.integrated_survival(x)), fin(nu.integrated_survival(x)))
        }),
        Relation::Dcx => pointwise_scan(&grid, tol, |x| (fin(mu.put_value(x)), fin(nu.put_value(x)))),
        Relation::Mrl => pointwise_scan(&grid, tol, |x| (psi_mrl(mu, x), psi_mrl(nu, x))),
        Relation::Wds => {
            for (time, m) in [(s, mu), (t, nu)] {
                if m.mean() >= 0.0 {
                    return Err(OrderError::MeanSignViolation {
                        relation,
                        requirement: "negative",
                        t: time,
                        mean: m.mean(),
                    });
                }
            }
            return compare_wds((s, mu), (t, nu), grid, tol);
        }
        Relation::Wis => unreachable!("handled above"),
    };
    let mut verdict = OrderVerdict::holding(relation, n);
    if let Some((x, lhs, rhs)) = scan {
        verdict.holds = false;
        verdict.witness = Some(Witness { s, t, x, lhs, rhs });
    }
    Ok(verdict)
}

/// [`compare_pair_at`] with the pair labelled `s = 0`, `t = 1`.
pub fn compare_pair(
    relation: Relation,
    mu: &Measure,
    nu: &Measure,
    policy: &GridPolicy,
    tol: f64,
) -> Result<OrderVerdict, OrderError> {
    compare_pair_at(relation, (0.0, mu), (1.0, nu), policy, tol)
}

/// Folds [`compare_pair_at`] over consecutive family members. The first
/// failing pair is reported; inconclusive pairs are reported only when no
/// pair fails outright.
pub fn compare_family(
    relation: Relation,
    fam: &MeasureFamily,
    policy: &GridPolicy,
    tol: f64,
) -> Result<OrderVerdict, OrderError> {
    let entries = fam.entries();
    let mut inconclusive: Option<OrderVerdict> = None;
    let mut points = 0;
    for w in entries.windows(2) {
        let v = compare_pair_at(relation, (w[0].0, &w[0].1), (w[1].0, &w[1].1), policy, tol)?;
        points = points.max(v.grid_points);
        if v.inconclusive {
            inconclusive.get_or_insert(v);
        } else if !v.holds {
            return Ok(v);
        }
    }
    Ok(inconclusive.unwrap_or_else(|| OrderVerdict::holding(relation, points)))
}

/// Evaluates `f` on the grid.
pub fn tabulate(grid: &[f64], f: impl Fn(f64) -> ExtendedReal) -> Vec<(f64, ExtendedReal)> {
    grid.iter().map(|&x| (x, f(x))).collect()
}

/// CSV with columns `x,value,is_infinite`.
pub fn tabulation_csv(rows: &[(f64, ExtendedReal)]) -> String {
    let mut out = String::from("x,value,is_infinite\n");
    for (x, v) in rows {
        match v {
            ExtendedReal::Finite(y) => out.push_str(&format!("{x:?},{y:?},false\n")),
            ExtendedReal::PosInf => out.push_str(&format!("{x:?},inf,true\n")),
        }
    }
    out
}
