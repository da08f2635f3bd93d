//! The acceptance suite: one self-checking run per criterion.
//!
//! Every run is seeded, so reports are reproducible bit for bit. The same
//! functions back the `acceptance` integration test and `wds examples run`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cox_hobson::barrier;
use crate::mc_sim::{check_monotone_t, check_supermartingale, embed_family, embed_measure, Binning, PathConfig};
use crate::measures::{Atom, Measure, MeasureFamily, Segment};
use crate::orderings::{
    compare_family, compare_pair, default_grid, interpolation_decomposition, psi_wds, tp2_check_grid, ExtendedReal,
    GridPolicy, OrderVerdict, Relation, Tabulation, DEFAULT_TOL,
};
use crate::transforms::examples::{density, density_alpha, discrete, gaussian_peacock, translated, two_atom};
use crate::transforms::{
    censor_family, convex_combine_family, example_family, random_translate_family, scale_mix_family, subordinate,
    Example, LogConcaveDensity, MixingKernel, PositiveDensity,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

/// `(id, name)` of every criterion, in order.
pub const CRITERIA: [(u8, &str); 12] = [
    (1, "discrete-closed-form"),
    (2, "density-closed-form"),
    (3, "barrier-inverse"),
    (4, "embedding-law"),
    (5, "monotone-times"),
    (6, "supermartingale"),
    (7, "wds-implies-dcx"),
    (8, "peacock"),
    (9, "translation-counterexample"),
    (10, "preservation"),
    (11, "tp2-machinery"),
    (12, "route-equivalence"),
];

/// Wall-clock limit in seconds, where the criterion states one.
pub fn runtime_budget(id: u8) -> Option<f64> {
    match id {
        1 => Some(1.0),
        2 => Some(2.0),
        3 => Some(5.0),
        _ => None,
    }
}

/// Short names accepted for the two closed-form criteria.
pub const ALIASES: [(&str, u8); 2] = [("prop42", 1), ("prop44", 2)];

/// Resolves a criterion name, alias or number.
pub fn criterion_id(name: &str) -> Option<u8> {
    CRITERIA
        .iter()
        .find(|(id, n)| *n == name || id.to_string() == name)
        .map(|(id, _)| *id)
        .or_else(|| ALIASES.iter().find(|a| a.0 == name).map(|a| a.1))
}

/// Runs one criterion; `None` for an unknown id.
pub fn run(id: u8) -> Option<CriterionReport> {
    let f: fn() -> (bool, String) = match id {
        1 => discrete_closed_form,
        2 => density_closed_form,
        3 => barrier_inverse,
        4 => embedding_law,
        5 => monotone_times,
        6 => supermartingale,
        7 => wds_implies_dcx,
        8 => peacock,
        9 => translation_counterexample,
        10 => preservation,
        11 => tp2_machinery,
        12 => route_equivalence,
        _ => return None,
    };
    let start = Instant::now();
    let (mut pass, mut detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    if let Some(budget) = runtime_budget(id) {
        if seconds > budget {
            pass = false;
            detail.push_str(&format!("; runtime {seconds:.2}s over the {budget}s budget"));
        }
    }
    Some(CriterionReport {
        id,
        name: CRITERIA[id as usize - 1].1.to_string(),
        pass,
        detail,
        seconds,
    })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|(id, _)| run(*id)).collect()
}

/// Fixed-width table of reports.
pub fn summary_table(reports: &[CriterionReport]) -> String {
    let mut out = format!(
        "{:>3}  {:<27} {:<5} {:>9}  detail\n",
        "id", "criterion", "pass", "seconds"
    );
    for r in reports {
        out.push_str(&format!(
            "{:>3}  {:<27} {:<5} {:>9.3}  {}\n",
            r.id,
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Random inputs

/// Positive TP2 table: `exp(r_i + c_j + sum_{k<=i, l<=j} g_kl)` with
/// `g >= 0` is log-supermodular, hence TP2.
pub fn random_tp2_tabulation<R: Rng + ?Sized>(rng: &mut R, n_rows: usize, n_cols: usize) -> Tabulation {
    let axis = |rng: &mut R, n: usize| {
        let mut x = rng.random_range(-1.0..1.0);
        (0..n)
            .map(|_| {
                x += rng.random_range(0.05..1.0);
                x
            })
            .collect::<Vec<f64>>()
    };
    let rows = axis(rng, n_rows);
    let cols = axis(rng, n_cols);
    let r: Vec<f64> = (0..n_rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..n_cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut acc = vec![vec![0.0; n_cols]; n_rows];
    for i in 0..n_rows {
        for j in 0..n_cols {
            let g = if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..0.5)
            };
            let up = if i > 0 { acc[i - 1][j] } else { 0.0 };
            let left = if j > 0 { acc[i][j - 1] } else { 0.0 };
            let diag = if i > 0 && j > 0 { acc[i - 1][j - 1] } else { 0.0 };
            acc[i][j] = g + up + left - diag;
        }
    }
    let values = (0..n_rows)
        .map(|i| (0..n_cols).map(|j| (r[i] + c[j] + acc[i][j]).exp()).collect())
        .collect();
    Tabulation { rows, cols, values }
}

/// One to three atoms plus an optional linear-density segment, negative mean.
pub fn random_negative_measure<R: Rng + ?Sized>(rng: &mut R) -> Measure {
    loop {
        let n_atoms = rng.random_range(0..4);
        let with_segment = n_atoms == 0 || rng.random_bool(0.5);
        let mut atoms: Vec<(f64, f64)> = (0..n_atoms)
            .map(|_| (rng.random_range(-3.0..2.0), rng.random_range(0.05..1.0)))
            .collect();
        let seg = with_segment.then(|| {
            let a = rng.random_range(-3.0..1.5);
            (
                a,
                a + rng.random_range(0.1..2.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.05..1.0),
            )
        });
        let total: f64 = atoms.iter().map(|a| a.1).sum::<f64>() + seg.map_or(0.0, |s| s.3);
        atoms.iter_mut().for_each(|a| a.1 /= total);
        let segments = seg
            .map(|(a, b, slope, w)| {
                let len = b - a;
                let norm = len * (1.0 + slope / 2.0);
                let c1 = w / total / norm * slope / len;
                vec![Segment::new(a, b, vec![w / total / norm - c1 * a, c1])]
            })
            .unwrap_or_default();
        let atoms = atoms.into_iter().map(|(x, w)| Atom::new(x, w)).collect();
        let m = Measure::from_parts(atoms, segments).expect("normalised parts");
        if m.mean() < -1e-3 {
            return m;
        }
    }
}

fn verdict(relation: Relation, fam: &MeasureFamily) -> OrderVerdict {
    compare_family(relation, fam, &GridPolicy::Auto, DEFAULT_TOL).expect("negative-mean family")
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

// ---------------------------------------------------------------------------
// Criteria

fn closed_form_report(worst: f64, tol: f64, mismatches: usize, checks: &[(&str, bool)]) -> (bool, String) {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = worst <= tol && mismatches == 0 && failed.is_empty();
    let mut detail = format!("max rel err {worst:.2e} (tol {tol:.0e}), infinity mismatches {mismatches}");
    if !failed.is_empty() {
        detail.push_str(&format!("; failed: {}", failed.join(", ")));
    }
    (pass, detail)
}

fn discrete_closed_form() -> (bool, String) {
    let times: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let (mut worst, mut mismatches) = (0.0_f64, 0);
    let mut checks = Vec::new();
    for k in [1u32, 2] {
        for &t in &times {
            let m = discrete(k, t).expect("t in (0, 1)");
            let tk = t.powi(k as i32);
            for x in uniform_points(-1.5, 1.5, 200) {
                let closed = if x <= -tk {
                    ExtendedReal::Finite(0.0)
                } else if x < 1.0 - tk {
                    ExtendedReal::Finite(1.0 - tk + t / (1.0 - t))
                } else {
                    ExtendedReal::PosInf
                };
                match (psi_wds(&m, x).expect("negative mean"), closed) {
                    (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => worst = worst.max(rel_err(a, b)),
                    (ExtendedReal::PosInf, ExtendedReal::PosInf) => {}
                    _ => mismatches += 1,
                }
            }
        }
        let fam = example_family(&Example::Discrete { k }, &times).expect("valid times");
        checks.push(("wds holds", verdict(Relation::Wds, &fam).holds));
        let st = verdict(Relation::StDecreasing, &fam);
        checks.push(("st-decreasing fails", !st.holds));
        checks.push(("witness at 0", st.witness.is_some_and(|w| w.x == 0.0)));
    }
    closed_form_report(worst, 1e-12, mismatches, &checks)
}

/// `Psi^wds` of the density family from the two branch formulas, with the
/// negative-branch denominator written so that both branches meet at 0.
pub fn density_psi(k: u32, v: f64, x: f64) -> ExtendedReal {
    let kf = k as f64;
    let c = (kf + 1.0) / (kf + 2.0);
    let alpha = density_alpha(k, v);
    if x <= -alpha {
        ExtendedReal::Finite(0.0)
    } else if x < 0.0 {
        let b = (2.0 - v).powi(2) / ((2.0 * v).powf(kf + 3.0) * (2.0 * v + 1.0));
        let num = -b * x * x + c * c * (2.0 * v).powf(kf + 1.0) * (2.0 * v + 1.0);
        ExtendedReal::Finite(num / (-2.0 * b * x + c))
    } else if x < 1.0 / v {
        let num = 2f64.powf(kf + 1.0) * (2.0 * v + 1.0) - x.powf(kf + 2.0);
        ExtendedReal::Finite(c * v.powf(kf + 1.0) / (1.0 - (v * x).powf(kf + 1.0)) * num)
    } else {
        ExtendedReal::PosInf
    }
}

fn density_closed_form() -> (bool, String) {
    let times = [0.6, 1.0, 1.5];
    let (mut worst, mut mismatches) = (0.0_f64, 0);
    let mut checks = Vec::new();
    for k in [0u32, 1, 2] {
        for &v in &times {
            let m = density(k, v).expect("v in (1/2, 2)");
            let alpha = density_alpha(k, v);
            let mut grid = uniform_points(-alpha * 1.1, 1.1 / v, 400);
            // Right next to 1/v the tail mass has no significant digits.
            grid.extend(uniform_points(-0.5, 0.999 / v, 100));
            for x in grid {
                match (psi_wds(&m, x).expect("negative mean"), density_psi(k, v, x)) {
                    (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => worst = worst.max(rel_err(a, b)),
                    (ExtendedReal::PosInf, ExtendedReal::PosInf) => {}
                    _ => mismatches += 1,
                }
            }
        }
        let fam = example_family(&Example::Density { k }, &times).expect("valid times");
        checks.push(("wds holds", verdict(Relation::Wds, &fam).holds));
        checks.push(("st-decreasing fails", !verdict(Relation::StDecreasing, &fam).holds));
    }
    closed_form_report(worst, 1e-10, mismatches, &checks)
}

/// 25 targets: random atomic laws, the density family, and mixtures.
pub fn barrier_corpus() -> Vec<Measure> {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut corpus = Vec::with_capacity(25);
    for _ in 0..10 {
        let n = rng.random_range(1..6);
        let atoms: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-3.0..2.0), rng.random_range(0.1..1.0)))
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mean: f64 = atoms.iter().map(|a| a.0 * a.1).sum::<f64>() / total;
        // Shift so the mean is -0.5.
        let pts: Vec<(f64, f64)> = atoms.iter().map(|&(x, w)| (x - mean - 0.5, w / total)).collect();
        corpus.push(Measure::discrete(&pts).expect("normalised"));
    }
    for (k, v) in [(0, 0.6), (0, 1.0), (1, 0.8), (1, 1.5), (2, 0.7), (2, 1.2), (3, 1.0)] {
        corpus.push(density(k, v).expect("valid parameters"));
    }
    while corpus.len() < 25 {
        let a = random_negative_measure(&mut rng);
        let b = if rng.random_bool(0.5) {
            discrete(1, rng.random_range(0.1..0.9)).expect("t in (0, 1)")
        } else {
            random_negative_measure(&mut rng)
        };
        let w = rng.random_range(0.2..0.8);
        corpus.push(Measure::mixture(&[(w, &a), (1.0 - w, &b)]).expect("mixture of measures"));
    }
    corpus
}

fn barrier_inverse() -> (bool, String) {
    let mut worst = 0.0_f64;
    let mut infinite_ok = true;
    for m in barrier_corpus() {
        let b = barrier(&m).expect("negative mean");
        let r = m.support_sup();
        for x in default_grid(&[&m]) {
            let inv = b.inverse(x);
            if x < r {
                let psi = psi_wds(&m, x).expect("negative mean").to_f64();
                worst = worst.max((inv - psi).abs());
            } else if x > r {
                infinite_ok &= inv == f64::INFINITY;
            }
        }
    }
    let pass = worst <= 1e-8 && infinite_ok;
    (
        pass,
        format!(
            "25 measures, sup |inverse - psi| = {worst:.2e} (tol 1e-8); beyond r: {}",
            if infinite_ok { "+inf" } else { "finite" }
        ),
    )
}

fn embedding_law() -> (bool, String) {
    let target = Measure::discrete(&[(-2.0, 0.5), (1.0, 0.5)]).expect("two atoms");
    let cfg = PathConfig {
        dt: 1e-4,
        n_paths: 100_000,
        seed: 20_240_401,
        ..PathConfig::default()
    };
    let res = match embed_measure(&target, &cfg) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let col = &res.columns[0];
    let values = col.stopped_values();
    let n = values.len() as f64;
    let upper = values.iter().filter(|&&b| b > -0.5).count() as f64 / n;
    let mean = values.iter().sum::<f64>() / n;
    let (freq_tol, mean_tol) = (4.0 * (0.25 / cfg.n_paths as f64).sqrt(), 0.02 + 2.0 * cfg.dt.sqrt());
    let censored = col.censored() as f64 / cfg.n_paths as f64;
    let pass = (upper - 0.5).abs() <= freq_tol && (mean + 0.5).abs() <= mean_tol && censored < 1e-3;
    (
        pass,
        format!(
            "P(upper) = {upper:.4} (tol {freq_tol:.4}), E[B_T] = {mean:.4} (tol {mean_tol:.3}), censored {:.3}%",
            100.0 * censored
        ),
    )
}

fn monotone_run() -> Result<crate::mc_sim::EmbeddingResult, crate::mc_sim::SimError> {
    let fam = example_family(&Example::Discrete { k: 1 }, &[0.2, 0.5, 0.8]).expect("valid times");
    embed_family(
        &fam,
        &PathConfig {
            dt: 1e-4,
            n_paths: 10_000,
            seed: 5,
            ..PathConfig::default()
        },
    )
}

fn monotone_times() -> (bool, String) {
    let res = match monotone_run() {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let report = check_monotone_t(&res);
    let censored = res.censored_paths();
    let pass = report.violating_paths == 0 && (censored as f64) < 1e-3 * res.config.n_paths as f64;
    (
        pass,
        format!(
            "{} paths checked, {} violations, {censored} censored",
            report.paths_checked, report.violating_paths
        ),
    )
}

fn supermartingale() -> (bool, String) {
    let res = match monotone_run() {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, t) in [(0.2, 0.5), (0.5, 0.8)] {
        match check_supermartingale(&res, s, t, 10, 0.01, Binning::Stopped) {
            Ok(r) => {
                let worst = r
                    .bins
                    .iter()
                    .map(|b| b.mean_increment - 3.0 * b.std_error)
                    .fold(f64::NEG_INFINITY, f64::max);
                pass &= r.all_pass;
                parts.push(format!(
                    "({s},{t}): {}/{} bins pass, max(mean - 3SE) = {worst:.4}",
                    r.bins.iter().filter(|b| b.pass).count(),
                    r.bins.len()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({s},{t}): {e}"));
            }
        }
    }
    (pass, parts.join("; "))
}

/// Random WDS families: chains of random measures accepted pair by pair.
fn random_wds_family<R: Rng + ?Sized>(rng: &mut R) -> MeasureFamily {
    let len = rng.random_range(2..=4);
    let mut members = vec![random_negative_measure(rng)];
    while members.len() < len {
        let last = members.last().expect("nonempty");
        let candidate = if rng.random_bool(0.5) {
            random_negative_measure(rng)
        } else {
            // Stochastic decrease of a random measure is always WDS.
            last.translate(-rng.random_range(0.0..1.0))
        };
        let v = compare_pair(Relation::Wds, last, &candidate, &GridPolicy::Auto, DEFAULT_TOL).expect("negative means");
        if v.holds && !v.inconclusive {
            members.push(candidate);
        }
    }
    let fam = MeasureFamily::new(members.into_iter().enumerate().map(|(i, m)| (i as f64, m)).collect())
        .expect("increasing times");
    if verdict(Relation::Wds, &fam).holds {
        fam
    } else {
        random_wds_family(rng)
    }
}

fn wds_implies_dcx() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut exceptions = 0;
    for _ in 0..100 {
        let fam = random_wds_family(&mut rng);
        let members: Vec<&Measure> = fam.measures().collect();
        let grid = GridPolicy::Explicit(default_grid(&members));
        let wds = compare_family(Relation::Wds, &fam, &grid, DEFAULT_TOL).expect("negative means");
        let dcx = compare_family(Relation::Dcx, &fam, &grid, DEFAULT_TOL).expect("negative means");
        if wds.holds && !dcx.holds {
            exceptions += 1;
        }
    }
    (
        exceptions == 0,
        format!("100 random WDS families, {exceptions} dcx failures"),
    )
}

fn peacock() -> (bool, String) {
    let build = || {
        let entries = [0.5, 1.0]
            .iter()
            .map(|&sd| (sd, gaussian_peacock(-1.0, sd, 60).expect("sd > 0")))
            .collect();
        MeasureFamily::new(entries).expect("increasing sd")
    };
    let (a, b) = (verdict(Relation::Wds, &build()), verdict(Relation::Wds, &build()));
    let reproducible = a == b;
    let pass = !a.holds && !a.inconclusive && a.witness.is_some() && reproducible;
    let w = a.witness.map_or("none".to_string(), |w| {
        format!("x = {}, psi_s = {}, psi_t = {}", w.x, w.lhs, w.rhs)
    });
    (
        pass,
        format!("wds holds = {}, witness {w}, reproducible = {reproducible}", a.holds),
    )
}

fn translation_counterexample() -> (bool, String) {
    let times = [0.25, 0.5, 0.75];
    let fam = |f: fn(f64) -> Result<Measure, _>| {
        MeasureFamily::new(times.iter().map(|&t| (t, f(t).expect("t > 0"))).collect()).expect("increasing times")
    };
    let base = verdict(Relation::Wds, &fam(two_atom));
    let hat = verdict(Relation::Wds, &fam(translated));
    let witness_ok = hat.witness.as_ref().is_some_and(|w| {
        let middle = |t: f64| w.x > -t - 1.0 && w.x <= -t;
        let expected = |t: f64| ExtendedReal::Finite((t + 1.0) / t);
        let close = |a: ExtendedReal, b: ExtendedReal| match (a, b) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs() < 1e-12,
            _ => false,
        };
        middle(w.s) && middle(w.t) && close(w.lhs, expected(w.s)) && close(w.rhs, expected(w.t))
    });
    let pass = base.holds && !hat.holds && witness_ok;
    let w = hat.witness.map_or("none".into(), |w| {
        format!(
            "s = {}, t = {}, x = {}, psi_s = {}, psi_t = {}",
            w.s, w.t, w.x, w.lhs, w.rhs
        )
    });
    (
        pass,
        format!(
            "two-atom holds = {}, translate holds = {}, witness {w}",
            base.holds, hat.holds
        ),
    )
}

fn preservation() -> (bool, String) {
    let times: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let fam = example_family(&Example::Discrete { k: 1 }, &times).expect("valid times");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut counts = Vec::new();
    let mut check = |name: &str, rng: &mut ChaCha8Rng, make: &dyn Fn(&mut ChaCha8Rng) -> Option<MeasureFamily>| {
        let mut ok = 0;
        for _ in 0..100 {
            if let Some(out) = make(rng) {
                let v = verdict(Relation::Wds, &out);
                ok += usize::from(v.holds && !v.inconclusive);
            }
        }
        counts.push((name.to_string(), ok));
    };
    check("censor", &mut rng, &|rng| {
        let a = rng.random_range(-1.5..1.0);
        censor_family(&fam, a, a + rng.random_range(0.01..2.0))
            .ok()
            .map(|o| o.family)
    });
    check("convex", &mut rng, &|rng| {
        let mut tau: Vec<f64> = times.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
        while tau.len() < 2 {
            tau = vec![times[0], times[rng.random_range(1..times.len())]];
        }
        convex_combine_family(&fam, &tau).ok().map(|o| o.family)
    });
    check("subordinate", &mut rng, &|rng| {
        // Linear B-spline collocation at increasing positions is totally positive.
        let n = times.len();
        let mut pos: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..(n - 1) as f64)).collect();
        pos.sort_by(f64::total_cmp);
        let values = pos
            .iter()
            .map(|&p| {
                let j = (p.floor() as usize).min(n - 2);
                let frac = p - j as f64;
                let mut row = vec![0.0; n];
                row[j] = 1.0 - frac;
                row[j + 1] = frac;
                row
            })
            .collect();
        let kernel = MixingKernel::new((1..=n).map(|i| i as f64).collect(), times.clone(), values).ok()?;
        subordinate(&fam, &kernel).ok().map(|o| o.family)
    });
    check("translate", &mut rng, &|rng| {
        let f = LogConcaveDensity::triangular(rng.random_range(0.05..1.0), 64).ok()?;
        random_translate_family(&fam, &f).ok().map(|o| o.family)
    });
    check("scale", &mut rng, &|rng| {
        let f = PositiveDensity::lognormal(rng.random_range(-0.3..0.3), rng.random_range(0.05..0.5), 200).ok()?;
        scale_mix_family(&fam, &f).ok().map(|o| o.family)
    });
    let pass = counts.iter().all(|c| c.1 == 100);
    let detail = counts
        .iter()
        .map(|(n, c)| format!("{n} {c}/100"))
        .collect::<Vec<_>>()
        .join(", ");
    (pass, detail)
}

fn tp2_machinery() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut products = 0;
    for _ in 0..500 {
        let (n, p, q) = (rng.random_range(2..8), rng.random_range(2..8), rng.random_range(2..8));
        let l = random_tp2_tabulation(&mut rng, n, p);
        let mut m = random_tp2_tabulation(&mut rng, p, q);
        m.rows = l.cols.clone();
        let eta: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..2.0)).collect();
        let prod = l.compose(&m, &eta).expect("matching inner grid");
        products += usize::from(tp2_check_grid(&prod, DEFAULT_TOL).expect("valid table").holds);
    }
    let mut interpolations = 0;
    for _ in 0..500 {
        let (n, p) = (rng.random_range(3..10), rng.random_range(2..8));
        let tab = random_tp2_tabulation(&mut rng, n, p);
        // Random increasing anchors a_0 < ... < a_r among the rows.
        let mut anchors: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if anchors.len() < 2 {
            anchors = vec![0, n - 1];
        }
        let holds = tp2_check_grid(&tab.interpolate_rows(&anchors), DEFAULT_TOL)
            .expect("valid table")
            .holds;
        // Four-case identity on one random minor for the first interval.
        let x1 = rng.random_range(0..n - 1);
        let x2 = rng.random_range(x1 + 1..n);
        let j = rng.random_range(0..p - 1);
        let l = rng.random_range(j + 1..p);
        let d = interpolation_decomposition(&tab, (anchors[0], anchors[1]), (x1, x2), (j, l));
        // Minors of rank-one blocks are pure roundoff, so scale by entries.
        let scale = tab.values.iter().flatten().fold(0.0f64, |a, v| a.max(v * v));
        let identity = (d.interpolated - d.combined()).abs() <= 1e-12 * scale
            && d.terms.iter().all(|(c, m)| *c >= 0.0 && *m >= -1e-12 * scale);
        interpolations += usize::from(holds && identity);
    }
    (
        products == 500 && interpolations == 500,
        format!("products {products}/500 TP2, interpolations {interpolations}/500 TP2 with four-case identity"),
    )
}

fn route_equivalence() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut inconclusive, mut holds) = (0, 0);
    for i in 0..1000 {
        let mu = random_negative_measure(&mut rng);
        // Half the pairs are built to hold, so both verdicts are exercised.
        let nu = if i % 2 == 0 {
            random_negative_measure(&mut rng)
        } else {
            mu.translate(-rng.random_range(0.0..1.0))
        };
        let v = compare_pair(Relation::Wds, &mu, &nu, &GridPolicy::Auto, DEFAULT_TOL).expect("negative means");
        let tp2_holds = v.tp2.as_ref().map(|r| r.holds);
        if v.inconclusive || tp2_holds != Some(v.holds) {
            inconclusive += 1;
        }
        holds += usize::from(v.holds);
    }
    (
        inconclusive == 0,
        format!("1000 pairs ({holds} hold), {inconclusive} disagreements"),
    )
}
