//! Tabulated densities for the smoothing transforms.

use serde::{Deserialize, Serialize};

use super::TransformError;

/// Tolerance of the chord test for concavity of the log-density.
pub const CONCAVITY_TOL: f64 = 1e-9;
/// Tolerance on the mass of a tabulated density.
pub const DENSITY_MASS_TOL: f64 = 1e-6;

fn check_grid(grid: &[f64], n_values: usize) -> Result<(), TransformError> {
    if grid.len() < 2 || grid.len() != n_values {
        return Err(TransformError::InvalidDensity(format!(
            "grid has {} points and {} values (need equal lengths >= 2)",
            grid.len(),
            n_values
        )));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(TransformError::InvalidDensity(
            "grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// First index where concavity fails: the finite values must form one
/// contiguous block and lie above every chord of neighbours within `tol`.
fn concavity_failure(grid: &[f64], logs: &[f64]) -> Option<usize> {
    let finite: Vec<usize> = (0..logs.len()).filter(|&i| logs[i].is_finite()).collect();
    let (&first, &last) = (finite.first()?, finite.last()?);
    if let Some(i) = (first..=last).find(|&i| !logs[i].is_finite()) {
        return Some(i);
    }
    (first + 1..last).find(|&i| {
        let lam = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1]);
        let chord = (1.0 - lam) * logs[i - 1] + lam * logs[i + 1];
        logs[i] < chord - CONCAVITY_TOL * chord.abs().max(1.0)
    })
}

fn trapezoid(grid: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    grid.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (f(i) + f(i + 1)))
        .sum()
}

/// Integral of `exp` of the linear function through `(0, a)` and `(h, b)`.
fn cell_mass(h: f64, a: f64, b: f64) -> f64 {
    if !(a.is_finite() && b.is_finite()) {
        return 0.0;
    }
    let d = b - a;
    if d.abs() < 1e-12 {
        h * a.exp() * (1.0 + d / 2.0)
    } else {
        h * a.exp() * d.exp_m1() / d
    }
}

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS_LEGENDRE: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];
/// Subcells per grid cell in the moment quadrature.
const QUAD_SUBCELLS: usize = 4;

/// Log-concave density whose logarithm is the linear interpolant of
/// `log_values` on a grid; zero outside the grid and on every cell with a
/// `-inf` end. The mass of that interpolant is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LogConcaveRecord", into = "LogConcaveRecord")]
pub struct LogConcaveDensity {
    grid: Vec<f64>,
    log_values: Vec<f64>,
}

/// JSON form; `null` log-values stand for `-inf`.
#[derive(Serialize, Deserialize)]
struct LogConcaveRecord {
    grid: Vec<f64>,
    log_values: Vec<Option<f64>>,
}

impl TryFrom<LogConcaveRecord> for LogConcaveDensity {
    type Error = TransformError;
    fn try_from(r: LogConcaveRecord) -> Result<Self, Self::Error> {
        let logs = r
            .log_values
            .into_iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect();
        LogConcaveDensity::new(r.grid, logs)
    }
}

impl From<LogConcaveDensity> for LogConcaveRecord {
    fn from(d: LogConcaveDensity) -> Self {
        LogConcaveRecord {
            log_values: d.log_values.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            grid: d.grid,
        }
    }
}

impl LogConcaveDensity {
    pub fn new(grid: Vec<f64>, log_values: Vec<f64>) -> Result<Self, TransformError> {
        let d = Self::unnormalised(grid, log_values, |index| TransformError::NotLogConcave { index })?;
        let mass = d.mass();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(TransformError::InvalidDensity(format!("mass {mass}")));
        }
        Ok(d)
    }

    /// Shape checks only; the mass is not required to be one.
    pub(crate) fn unnormalised(
        grid: Vec<f64>,
        log_values: Vec<f64>,
        not_concave: impl Fn(usize) -> TransformError,
    ) -> Result<Self, TransformError> {
        check_grid(&grid, log_values.len())?;
        if log_values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(TransformError::InvalidDensity(
                "log-values must be finite or -inf".into(),
            ));
        }
        if log_values.iter().all(|v| !v.is_finite()) {
            return Err(TransformError::InvalidDensity(
                "density vanishes on the whole grid".into(),
            ));
        }
        if let Some(index) = concavity_failure(&grid, &log_values) {
            return Err(not_concave(index));
        }
        Ok(LogConcaveDensity { grid, log_values })
    }

    /// From unnormalised density values; zeros become `-inf` and the
    /// interpolant is rescaled to mass one.
    pub fn from_density(grid: Vec<f64>, values: &[f64]) -> Result<Self, TransformError> {
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(TransformError::InvalidDensity(
                "density values must be finite and >= 0".into(),
            ));
        }
        let logs = values.iter().map(|v| v.ln()).collect();
        let d = Self::unnormalised(grid, logs, |index| TransformError::NotLogConcave { index })?;
        let mass = d.mass();
        if !(mass > 0.0) {
            return Err(TransformError::InvalidDensity("no cell carries mass".into()));
        }
        LogConcaveDensity::new(d.grid, d.log_values.iter().map(|l| l - mass.ln()).collect())
    }

    /// Triangular shape on `[-w, w]` sampled at `2 n + 1` points; the two
    /// outer cells vanish, so the support is `+- w (n - 1) / n`.
    pub fn triangular(w: f64, n: usize) -> Result<Self, TransformError> {
        let n = n.max(2);
        let grid: Vec<f64> = (-(n as i64)..=n as i64).map(|i| w * i as f64 / n as f64).collect();
        let values: Vec<f64> = grid.iter().map(|x| ((1.0 - x.abs() / w) / w).max(0.0)).collect();
        LogConcaveDensity::from_density(grid, &values)
    }

    /// Centred Gaussian truncated to `+- 8 sd`, `2 n + 1` points.
    pub fn gaussian(sd: f64, n: usize) -> Result<Self, TransformError> {
        let n = n.max(8);
        let grid: Vec<f64> = (-(n as i64)..=n as i64)
            .map(|i| 8.0 * sd * i as f64 / n as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|x| (-0.5 * (x / sd).powi(2)).exp()).collect();
        LogConcaveDensity::from_density(grid, &values)
    }

    /// Uniform density on `[c - w, c + w]`; point-like for small `w`.
    pub fn spike(c: f64, w: f64) -> Result<Self, TransformError> {
        let log = -(2.0 * w).ln();
        LogConcaveDensity::new(vec![c - w, c + w], vec![log, log])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn mass(&self) -> f64 {
        let (g, l) = (&self.grid, &self.log_values);
        (1..g.len()).map(|i| cell_mass(g[i] - g[i - 1], l[i - 1], l[i])).sum()
    }

    /// `int phi(x) f(x) dx` by Gauss-Legendre on every cell.
    fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        let (g, l) = (&self.grid, &self.log_values);
        let mut total = 0.0;
        for i in 1..g.len() {
            if !(l[i - 1].is_finite() && l[i].is_finite()) {
                continue;
            }
            let h = (g[i] - g[i - 1]) / QUAD_SUBCELLS as f64;
            for s in 0..QUAD_SUBCELLS {
                let mid = g[i - 1] + (s as f64 + 0.5) * h;
                for (node, weight) in GAUSS_LEGENDRE {
                    let x = mid + 0.5 * h * node;
                    let lam = (x - g[i - 1]) / (g[i] - g[i - 1]);
                    let log_f = (1.0 - lam) * l[i - 1] + lam * l[i];
                    total += 0.5 * h * weight * phi(x) * log_f.exp();
                }
            }
        }
        total
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x) / self.integrate(|_| 1.0)
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.integrate(|x| (x - m).powi(2)) / self.integrate(|_| 1.0)).sqrt()
    }

    /// Hull of the cells carrying positive density.
    pub fn support(&self) -> (f64, f64) {
        let l = &self.log_values;
        let first = l.iter().position(|v| v.is_finite()).expect("nonzero density");
        let last = l.iter().rposition(|v| v.is_finite()).expect("nonzero density");
        (self.grid[first], self.grid[last])
    }

    /// Log-density with linear interpolation of the log-values, so the
    /// interpolant stays concave.
    pub fn log_density(&self, x: f64) -> f64 {
        let g = &self.grid;
        if !(x >= g[0] && x <= g[g.len() - 1]) {
            return f64::NEG_INFINITY;
        }
        let i = g.partition_point(|&p| p <= x);
        if i == 0 || g[i - 1] == x {
            return self.log_values[i.saturating_sub(1)];
        }
        let (lo, hi) = (self.log_values[i - 1], self.log_values[i]);
        if !(lo.is_finite() && hi.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let lam = (x - g[i - 1]) / (g[i] - g[i - 1]);
        (1.0 - lam) * lo + lam * hi
    }
}

/// Density on `(0, inf)` whose logarithmic variable has a log-concave density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PositiveRecord", into = "PositiveRecord")]
pub struct PositiveDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Density of `log Y` on `log` of the positive grid points.
    log_variable: LogConcaveDensity,
}

#[derive(Serialize, Deserialize)]
struct PositiveRecord {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<PositiveRecord> for PositiveDensity {
    type Error = TransformError;
    fn try_from(r: PositiveRecord) -> Result<Self, Self::Error> {
        PositiveDensity::new(r.grid, r.values)
    }
}

impl From<PositiveDensity> for PositiveRecord {
    fn from(d: PositiveDensity) -> Self {
        PositiveRecord {
            grid: d.grid,
            values: d.values,
        }
    }
}

impl PositiveDensity {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, TransformError> {
        check_grid(&grid, values.len())?;
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(TransformError::InvalidDensity(
                "density values must be finite and >= 0".into(),
            ));
        }
        if let Some(i) = (0..grid.len()).find(|&i| grid[i] <= 0.0 && values[i] > 0.0) {
            return Err(TransformError::NotPositiveSupport { x: grid[i] });
        }
        let mass = trapezoid(&grid, |i| values[i]);
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(TransformError::InvalidDensity(format!("trapezoid mass {mass}")));
        }
        let keep: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > 0.0).collect();
        let u: Vec<f64> = keep.iter().map(|&i| grid[i].ln()).collect();
        // Density of log Y at u is f(e^u) e^u.
        let logs: Vec<f64> = keep.iter().zip(&u).map(|(&i, ui)| values[i].ln() + ui).collect();
        let log_variable =
            LogConcaveDensity::unnormalised(u, logs, |i| TransformError::NotLogLogConcave { index: keep[i] })?;
        Ok(PositiveDensity {
            grid,
            values,
            log_variable,
        })
    }

    /// Lognormal density of `exp(N(mu, sigma^2))` on `mu +- 8 sigma` in log
    /// scale with `2 n + 1` points, renormalised to trapezoid mass one.
    pub fn lognormal(mu: f64, sigma: f64, n: usize) -> Result<Self, TransformError> {
        let n = n.max(8);
        let grid: Vec<f64> = (-(n as i64)..=n as i64)
            .map(|i| (mu + 8.0 * sigma * i as f64 / n as f64).exp())
            .collect();
        let raw: Vec<f64> = grid
            .iter()
            .map(|y| (-0.5 * ((y.ln() - mu) / sigma).powi(2)).exp() / y)
            .collect();
        let mass = trapezoid(&grid, |i| raw[i]);
        PositiveDensity::new(grid, raw.iter().map(|v| v / mass).collect())
    }

    /// Point-like density of width `2 w` at `c > w`.
    pub fn spike(c: f64, w: f64) -> Result<Self, TransformError> {
        PositiveDensity::new(vec![c - w, c, c + w], vec![0.0, 1.0 / w, 0.0])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        trapezoid(&self.grid, |i| self.grid[i] * self.values[i])
    }

    pub fn log_variable(&self) -> &LogConcaveDensity {
        &self.log_variable
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_are_valid() {
        let tri = LogConcaveDensity::triangular(1.0, 50).unwrap();
        assert!((tri.mass() - 1.0).abs() < 1e-12);
        assert!(tri.mean().abs() < 1e-12);
        assert!((tri.std_dev() - (1.0f64 / 6.0).sqrt()).abs() < 1e-3);
        let (lo, hi) = tri.support();
        assert!((lo + 0.98).abs() < 1e-12 && (hi - 0.98).abs() < 1e-12);
        let g = LogConcaveDensity::gaussian(0.3, 200).unwrap();
        assert!((g.std_dev() - 0.3).abs() < 1e-6);
        let s = LogConcaveDensity::spike(0.0, 1e-6).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        let ln = PositiveDensity::lognormal(0.0, 0.25, 400).unwrap();
        assert!((ln.mean() - (0.25f64.powi(2) / 2.0).exp()).abs() < 1e-4);
        assert!(PositiveDensity::spike(2.0, 1e-6).is_ok());
    }

    #[test]
    fn rejects_bad_shapes() {
        let grid = vec![-1.0, 0.0, 1.0];
        // Bimodal: log-values dip in the middle.
        let bimodal = LogConcaveDensity::new(grid.clone(), vec![0.0, -2.0, 0.0]);
        assert!(matches!(bimodal, Err(TransformError::NotLogConcave { index: 1 })));
        let holes = LogConcaveDensity::new(
            vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            vec![0.0, f64::NEG_INFINITY, 0.0, -1.0, -2.0],
        );
        assert!(matches!(holes, Err(TransformError::NotLogConcave { index: 1 })));
        assert!(matches!(
            LogConcaveDensity::from_density(grid, &[0.0, 1.0, 0.0]),
            Err(TransformError::InvalidDensity(_))
        ));
        assert!(matches!(
            PositiveDensity::new(vec![-1.0, 1.0], vec![0.5, 0.5]),
            Err(TransformError::NotPositiveSupport { x: -1.0 })
        ));
        // Log variable with density proportional to exp(u) + exp(-u) shape dips.
        let u = [-2.0f64, -1.0, 0.0, 1.0, 2.0];
        let mut vals: Vec<f64> = u.iter().map(|u: &f64| (u.powi(2) - 6.0).exp() / u.exp()).collect();
        let grid: Vec<f64> = u.iter().map(|u| u.exp()).collect();
        let mass: f64 = grid
            .windows(2)
            .zip(vals.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum();
        vals.iter_mut().for_each(|v| *v /= mass);
        assert!(matches!(
            PositiveDensity::new(grid, vals),
            Err(TransformError::NotLogLogConcave { .. })
        ));
    }

    #[test]
    fn log_density_interpolates() {
        let d =
            LogConcaveDensity::from_density(vec![-1.0, 0.0, 1.0], &[(-1.0f64).exp(), 1.0, (-1.0f64).exp()]).unwrap();
        // Exact mass of the log-linear interpolant: 2 (1 - 1/e) up to scale.
        assert!((d.log_values()[1] + (2.0 * (1.0 - (-1.0f64).exp())).ln()).abs() < 1e-12);
        assert_eq!(d.log_density(0.5), 0.5 * (d.log_values()[1] + d.log_values()[2]));
        assert_eq!(d.log_density(2.0), f64::NEG_INFINITY);
        assert_eq!(d.log_density(-1.0), d.log_values()[0]);
        let tri = LogConcaveDensity::triangular(0.5, 4).unwrap();
        let json = serde_json::to_string(&tri).unwrap();
        assert!(json.contains("null"));
        let back: LogConcaveDensity = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tri);
    }
}
