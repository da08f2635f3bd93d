use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EmbeddingResult, TimeColumn};
use crate::measures::{sort_dedup, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ks,
    W1,
}

/// Exact KS or Wasserstein-1 distance between two measures.
pub fn empirical_distance(sample: &Measure, target: &Measure, metric: Metric) -> f64 {
    let mut knots = sample.knots();
    knots.extend(target.knots());
    sort_dedup(&mut knots);
    match metric {
        Metric::Ks => knots
            .iter()
            .flat_map(|&x| {
                let right = (sample.cdf(x) - target.cdf(x)).abs();
                let left = (target.survival_from(x) - sample.survival_from(x)).abs();
                [right, left]
            })
            .fold(0.0, f64::max),
        Metric::W1 => knots.windows(2).map(|w| gap_w1(sample, target, w[0], w[1])).sum(),
    }
}

/// `int_a^b F(x) dx` for a measure without atoms in `(a, b)`.
fn int_cdf(m: &Measure, a: f64, b: f64) -> f64 {
    let (mass_a, mom_a) = m.tail_open(a);
    let (mass_b, mom_b) = m.tail(b);
    let (mass, mom) = (mass_a - mass_b, mom_a - mom_b);
    (b - a) * m.cdf(a) + b * mass - mom
}

/// `int_a^b |F - G|` between consecutive knots of both measures.
fn gap_w1(p: &Measure, q: &Measure, a: f64, b: f64) -> f64 {
    let (fa, ga) = (p.cdf(a), q.cdf(a));
    let diffuse = |m: &Measure| m.survival_after(a) - m.survival_from(b) > 0.0;
    match (diffuse(p), diffuse(q)) {
        (false, false) => (fa - ga).abs() * (b - a),
        (true, true) => {
            // Both continuous between knots: composite Simpson.
            let n = 256;
            let h = (b - a) / n as f64;
            let f = |x: f64| (p.cdf(x) - q.cdf(x)).abs();
            let inner: f64 = (1..n)
                .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
                .sum();
            let at_b = (q.survival_from(b) - p.survival_from(b)).abs();
            h / 3.0 * (f(a) + inner + at_b)
        }
        (p_diffuse, _) => {
            // One side is constant; the other is increasing and continuous.
            let (flat, curve) = if p_diffuse { (q, p) } else { (p, q) };
            let c = flat.cdf(a);
            let f = |x: f64| curve.cdf(x) - c;
            let (mut lo, mut hi) = (a, b);
            if f(a) >= 0.0 {
                hi = a;
            } else if curve.total_mass() - curve.survival_from(b) > c {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if f(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let cross = hi;
            let below = c * (cross - a) - int_cdf(curve, a, cross);
            let above = int_cdf(curve, cross, b) - c * (b - cross);
            below.max(0.0) + above.max(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("time {0} is not in the embedding result")]
    UnknownTime(f64),
    #[error("times must satisfy s <= t (got {s} > {t})")]
    UnorderedTimes { s: f64, t: f64 },
    #[error("bin {bin} holds {count} paths, fewer than {min}")]
    BinTooSmall { bin: usize, count: usize, min: usize },
}

/// Minimum number of paths per bin in [`check_supermartingale`].
pub const MIN_BIN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binning {
    /// Quantile bins on `B_{T_s}`.
    Stopped,
    /// Quantile bins on `B_{T_s}`, each split into `s_bins` quantile bins
    /// on `S_{T_s}`.
    Joint { s_bins: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub b_lo: f64,
    pub b_hi: f64,
    pub count: usize,
    pub mean_increment: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleReport {
    pub s: f64,
    pub t: f64,
    pub bins: Vec<BinReport>,
    pub all_pass: bool,
    pub mean_increment: f64,
    pub std_error: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn column(res: &EmbeddingResult, t: f64) -> Result<&TimeColumn, StatsError> {
    res.column(t).ok_or(StatsError::UnknownTime(t))
}

/// Splits `0..n` into `k` contiguous groups of near-equal size.
fn rank_groups(n: usize, k: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let k = k.max(1);
    (0..k).map(move |i| (i * n / k)..((i + 1) * n / k))
}

/// Binned test of `E[B_{T_t} - B_{T_s} | bin] <= tol + 3 SE` over paths
/// not censored at either time.
pub fn check_supermartingale(
    res: &EmbeddingResult,
    s: f64,
    t: f64,
    n_bins: usize,
    tol: f64,
    binning: Binning,
) -> Result<SupermartingaleReport, StatsError> {
    if s > t {
        return Err(StatsError::UnorderedTimes { s, t });
    }
    let (cs, ct) = (column(res, s)?, column(res, t)?);
    let mut paths: Vec<usize> = (0..cs.stops.len())
        .filter(|&i| !cs.stops[i].censored && !ct.stops[i].censored)
        .collect();
    paths.sort_by(|&i, &j| cs.stops[i].b.total_cmp(&cs.stops[j].b).then(i.cmp(&j)));

    let mut groups: Vec<Vec<usize>> = rank_groups(paths.len(), n_bins).map(|r| paths[r].to_vec()).collect();
    if let Binning::Joint { s_bins } = binning {
        groups = groups
            .into_iter()
            .flat_map(|mut g| {
                g.sort_by(|&i, &j| cs.stops[i].s.total_cmp(&cs.stops[j].s).then(i.cmp(&j)));
                rank_groups(g.len(), s_bins).map(|r| g[r].to_vec()).collect::<Vec<_>>()
            })
            .collect();
    }

    let increment = |i: usize| ct.stops[i].b - cs.stops[i].b;
    let mut bins = Vec::with_capacity(groups.len());
    for (bin, g) in groups.iter().enumerate() {
        if g.len() < MIN_BIN {
            return Err(StatsError::BinTooSmall {
                bin,
                count: g.len(),
                min: MIN_BIN,
            });
        }
        let inc: Vec<f64> = g.iter().map(|&i| increment(i)).collect();
        let (mean, se) = mean_se(&inc);
        let bs = g.iter().map(|&i| cs.stops[i].b);
        bins.push(BinReport {
            b_lo: bs.clone().fold(f64::INFINITY, f64::min),
            b_hi: bs.fold(f64::NEG_INFINITY, f64::max),
            count: g.len(),
            mean_increment: mean,
            std_error: se,
            pass: mean <= tol + 3.0 * se,
        });
    }
    let all: Vec<f64> = paths.iter().map(|&i| increment(i)).collect();
    let (mean_increment, std_error) = mean_se(&all);
    Ok(SupermartingaleReport {
        s,
        t,
        all_pass: bins.iter().all(|b| b.pass),
        bins,
        mean_increment,
        std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub paths_checked: usize,
    pub violating_paths: usize,
    /// `(path, t_earlier, t_later)` of the first violation.
    pub first_violation: Option<(usize, f64, f64)>,
}

/// Counts paths on which `T_t` decreases between consecutive family times.
/// Paths censored at any time are skipped.
pub fn check_monotone_t(res: &EmbeddingResult) -> MonotoneReport {
    let n = res.config.n_paths;
    let mut report = MonotoneReport {
        paths_checked: 0,
        violating_paths: 0,
        first_violation: None,
    };
    for i in 0..n {
        if res.columns.iter().any(|c| c.stops[i].censored) {
            continue;
        }
        report.paths_checked += 1;
        let bad = res.columns.windows(2).find(|w| w[0].stops[i].time > w[1].stops[i].time);
        if let Some(w) = bad {
            report.violating_paths += 1;
            report.first_violation.get_or_insert((i, w[0].t, w[1].t));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSummary {
    pub t: f64,
    pub paths: usize,
    pub censored: usize,
    pub mean_b: f64,
    pub std_b: f64,
    pub target_mean: f64,
    pub ks: f64,
    pub w1: f64,
    pub mean_time: f64,
}

impl EmbeddingResult {
    /// Per-time statistics against the targets, matched by position.
    pub fn summarize(&self, targets: &[&Measure]) -> Vec<TimeSummary> {
        self.columns
            .iter()
            .zip(targets)
            .map(|(c, target)| {
                let values = c.stopped_values();
                let (mean_b, se) = mean_se(&values);
                let emp = c.empirical();
                let dist = |metric| emp.as_ref().map_or(f64::NAN, |e| empirical_distance(e, target, metric));
                let times: Vec<f64> = c.stops.iter().filter(|s| !s.censored).map(|s| s.time).collect();
                TimeSummary {
                    t: c.t,
                    paths: values.len(),
                    censored: c.censored(),
                    mean_b,
                    std_b: se * (values.len() as f64).sqrt(),
                    target_mean: target.mean(),
                    ks: dist(Metric::Ks),
                    w1: dist(Metric::W1),
                    mean_time: times.iter().sum::<f64>() / times.len().max(1) as f64,
                }
            })
            .collect()
    }
}
