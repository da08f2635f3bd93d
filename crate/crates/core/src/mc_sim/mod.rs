//! Monte Carlo Cox-Hobson embedding on shared Brownian paths.
//!
//! Every family member `t` stops at the first grid time with
//! `S >= Psi^wds_t(B)`, counted from time zero on the same path, so
//! pathwise monotonicity of the stopping times is an observation rather than
//! a consequence of the scheme.
//!
//! Targets with negative mean have heavy-tailed stopping times (a first
//! passage downwards from the running maximum is part of the rule), so a
//! fixed step cannot reach a horizon that censors fewer than 0.1% of paths.
//! Steps are therefore adaptive: with `rho` the largest radius such that no
//! point of `[B - rho, inf) x (-inf, S + rho]` satisfies the rule for any
//! active member, the step is `max(dt, (rho / 6)^2)`. A step longer than `dt`
//! draws the exact Brownian-bridge maximum so `S` stays exact; inside the
//! `6 sqrt(dt)` band the walk uses plain `dt` steps with grid maxima.

mod stats;

pub use stats::{
    check_monotone_t, check_supermartingale, empirical_distance, BinReport, Binning, Metric, MonotoneReport,
    StatsError, SupermartingaleReport, TimeSummary, MIN_BIN,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{Measure, MeasureFamily};
use crate::orderings::{compare_family, ExtendedReal, GridPolicy, OrderVerdict, PsiWds, Relation, DEFAULT_TOL};

/// Safe-region radius in units of the step's standard deviation.
pub const SAFETY_SIGMAS: f64 = 6.0;
/// Censoring fraction above which a run is rejected.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;
const MAX_DOUBLINGS: i32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Worker threads; `0` lets rayon decide. Results do not depend on it.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub allow_non_wds: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            dt: 1e-4,
            horizon: 1e7,
            n_paths: 10_000,
            seed: 0,
            threads: 0,
            allow_non_wds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("family member at t = {t} has non-negative mean {mean}")]
    NonNegativeMean { t: f64, mean: f64 },
    #[error("family is not WDS ordered (pair {s} -> {t})")]
    NotWdsOrdered { s: f64, t: f64, verdict: Box<OrderVerdict> },
    #[error("{censored} of {total} paths reached the horizon")]
    HorizonTooSmall { censored: usize, total: usize },
    #[error("invalid path configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Order(#[from] crate::orderings::OrderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    /// Stopping time, or the horizon when censored.
    pub time: f64,
    pub b: f64,
    pub s: f64,
    pub censored: bool,
}

/// Stops of every path for one family time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeColumn {
    pub t: f64,
    pub stops: Vec<Stop>,
}

impl TimeColumn {
    pub fn censored(&self) -> usize {
        self.stops.iter().filter(|s| s.censored).count()
    }

    /// Stopped values of non-censored paths.
    pub fn stopped_values(&self) -> Vec<f64> {
        self.stops.iter().filter(|s| !s.censored).map(|s| s.b).collect()
    }

    /// Empirical law of `B_T` over non-censored paths.
    pub fn empirical(&self) -> Option<Measure> {
        Measure::from_samples(&self.stopped_values()).ok()
    }

    /// CSV `path_id,T,BT,ST,censored`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path_id,T,BT,ST,censored\n");
        for (i, s) in self.stops.iter().enumerate() {
            out.push_str(&format!("{i},{:?},{:?},{:?},{}\n", s.time, s.b, s.s, s.censored));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub config: PathConfig,
    pub columns: Vec<TimeColumn>,
    /// Total simulated steps over all paths.
    pub steps: u64,
}

impl EmbeddingResult {
    pub fn times(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.t).collect()
    }

    pub fn column(&self, t: f64) -> Option<&TimeColumn> {
        self.columns.iter().find(|c| c.t == t)
    }

    /// Paths censored at one or more family times.
    pub fn censored_paths(&self) -> usize {
        let n = self.config.n_paths;
        (0..n)
            .filter(|&i| self.columns.iter().any(|c| c.stops[i].censored))
            .count()
    }
}

struct Member<'a> {
    psi: PsiWds<'a>,
}

impl Member<'_> {
    fn psi(&self, x: f64) -> ExtendedReal {
        self.psi.eval(x)
    }

    fn stops(&self, b: f64, s: f64) -> bool {
        ExtendedReal::Finite(s) >= self.psi(b)
    }

    /// Whether the rule cannot fire anywhere in `[b - rho, inf) x (-inf, s + rho]`.
    fn safe(&self, b: f64, s: f64, rho: f64) -> bool {
        self.psi(b - rho) > ExtendedReal::Finite(s + rho)
    }
}

fn validate(cfg: &PathConfig) -> Result<(), SimError> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(SimError::InvalidConfig(format!("dt = {}", cfg.dt)));
    }
    if !(cfg.horizon > 0.0) {
        return Err(SimError::InvalidConfig(format!("horizon = {}", cfg.horizon)));
    }
    if cfg.n_paths == 0 {
        return Err(SimError::InvalidConfig("n_paths = 0".into()));
    }
    Ok(())
}

/// Thread count from `WDS_EMBED_THREADS` (`0` or unset means automatic).
pub fn threads_from_env() -> usize {
    std::env::var("WDS_EMBED_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Embeds every member of a WDS family on shared paths.
pub fn embed_family(fam: &MeasureFamily, cfg: &PathConfig) -> Result<EmbeddingResult, SimError> {
    for (t, m) in fam.entries() {
        if m.mean() >= 0.0 {
            return Err(SimError::NonNegativeMean { t: *t, mean: m.mean() });
        }
    }
    if !cfg.allow_non_wds {
        let v = compare_family(Relation::Wds, fam, &GridPolicy::Auto, DEFAULT_TOL)?;
        if !v.holds {
            let (s, t) = v.witness.as_ref().map_or((f64::NAN, f64::NAN), |w| (w.s, w.t));
            return Err(SimError::NotWdsOrdered {
                s,
                t,
                verdict: Box::new(v),
            });
        }
    }
    let members: Vec<(f64, &Measure)> = fam.entries().iter().map(|(t, m)| (*t, m)).collect();
    embed(&members, cfg)
}

/// Embeds a single target, reported as one column at `t = 0`.
pub fn embed_measure(m: &Measure, cfg: &PathConfig) -> Result<EmbeddingResult, SimError> {
    if m.mean() >= 0.0 {
        return Err(SimError::NonNegativeMean { t: 0.0, mean: m.mean() });
    }
    embed(&[(0.0, m)], cfg)
}

fn embed(targets: &[(f64, &Measure)], cfg: &PathConfig) -> Result<EmbeddingResult, SimError> {
    validate(cfg)?;
    let members = targets
        .iter()
        .map(|(t, m)| {
            PsiWds::new(m)
                .map(|psi| Member { psi })
                .map_err(|_| SimError::NonNegativeMean { t: *t, mean: m.mean() })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let run = || -> Vec<(Vec<Stop>, u64)> {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| simulate_path(&members, cfg, i as u64))
            .collect()
    };
    let results = if cfg.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?
            .install(run)
    };

    let mut columns: Vec<TimeColumn> = targets
        .iter()
        .map(|(t, _)| TimeColumn {
            t: *t,
            stops: Vec::with_capacity(cfg.n_paths),
        })
        .collect();
    let mut steps = 0;
    for (stops, n) in results {
        steps += n;
        for (col, stop) in columns.iter_mut().zip(stops) {
            col.stops.push(stop);
        }
    }
    let result = EmbeddingResult {
        config: cfg.clone(),
        columns,
        steps,
    };
    let censored = result.censored_paths();
    if censored as f64 > MAX_CENSORED_FRACTION * cfg.n_paths as f64 {
        return Err(SimError::HorizonTooSmall {
            censored,
            total: cfg.n_paths,
        });
    }
    Ok(result)
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// One path: returns the stop of every member and the number of steps.
fn simulate_path(members: &[Member<'_>], cfg: &PathConfig, path: u64) -> (Vec<Stop>, u64) {
    let mut rng = path_rng(cfg.seed, path);
    let mut stops: Vec<Option<Stop>> = vec![None; members.len()];
    let (mut time, mut b, mut s) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut active = members.len();
    let mut steps = 0_u64;
    let rho0 = SAFETY_SIGMAS * cfg.dt.sqrt();
    let mut level: i32 = 0;

    loop {
        for (stop, m) in stops.iter_mut().zip(members) {
            if stop.is_none() && m.stops(b, s) {
                *stop = Some(Stop {
                    time,
                    b,
                    s,
                    censored: false,
                });
                active -= 1;
            }
        }
        if active == 0 || time >= cfg.horizon {
            break;
        }

        let safe = |rho: f64| {
            stops
                .iter()
                .zip(members)
                .all(|(stop, m)| stop.is_some() || m.safe(b, s, rho))
        };
        // Largest safe radius rho0 * 2^level, warm-started from the last step.
        let radius = |level: i32| rho0 * 2f64.powi(level);
        if safe(radius(level)) {
            while level < MAX_DOUBLINGS && safe(radius(level + 1)) {
                level += 1;
            }
        } else {
            while level >= 0 && !safe(radius(level)) {
                level -= 1;
            }
        }
        steps += 1;
        if level < 0 {
            level = 0;
            let dt = cfg.dt.min(cfg.horizon - time).max(0.0);
            let z: f64 = rng.sample(StandardNormal);
            b += z * dt.sqrt();
            s = s.max(b);
            time += dt;
        } else {
            let rho = radius(level);
            let h = ((rho / SAFETY_SIGMAS).powi(2)).min(cfg.horizon - time).max(cfg.dt);
            let z: f64 = rng.sample(StandardNormal);
            let delta = z * h.sqrt();
            let u: f64 = 1.0 - rng.random::<f64>();
            let bridge_max = 0.5 * (delta + (delta * delta - 2.0 * h * u.ln()).sqrt());
            s = s.max(b + bridge_max);
            b += delta;
            time += h;
        }
    }

    let stops = stops
        .into_iter()
        .map(|st| {
            st.unwrap_or(Stop {
                time,
                b,
                s,
                censored: true,
            })
        })
        .collect();
    (stops, steps)
}
