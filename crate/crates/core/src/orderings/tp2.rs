use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A function of two ordered variables sampled on a product grid;
/// `values[i][j]` is the value at `(rows[i], cols[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulation {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Tp2Error {
    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("{axis} grid is not strictly increasing at index {index}")]
    UnsortedGrid { axis: &'static str, index: usize },
    #[error("value table is {got_rows}x{got_cols}, expected {rows}x{cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tp2Route {
    /// Strictly positive table: adjacent minors suffice.
    Adjacent,
    /// Table with zeros: every 2x2 minor is checked.
    AllMinors,
}

/// A 2x2 minor `a d - b c` with `a = f(s, x)`, `b = f(s, y)`, `c = f(t, x)`,
/// `d = f(t, y)` for `s < t`, `x < y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tp2Violation {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub entries: [f64; 4],
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tp2Report {
    pub holds: bool,
    pub route: Tp2Route,
    pub minors_checked: u64,
    pub violation: Option<Tp2Violation>,
}

fn check_axis(axis: &'static str, g: &[f64]) -> Result<(), Tp2Error> {
    match g.windows(2).position(|w| !(w[0] < w[1])) {
        Some(i) => Err(Tp2Error::UnsortedGrid { axis, index: i + 1 }),
        None => Ok(()),
    }
}

/// Minor of rows `(i, k)` and columns `(j, l)`, or `None` within tolerance.
fn minor(tab: &Tabulation, i: usize, k: usize, j: usize, l: usize, tol: f64) -> Option<Tp2Violation> {
    let v = &tab.values;
    let (a, b, c, d) = (v[i][j], v[i][l], v[k][j], v[k][l]);
    let (ad, bc) = (a * d, b * c);
    let det = ad - bc;
    (det < -tol * ad.abs().max(bc.abs())).then(|| Tp2Violation {
        s: tab.rows[i],
        t: tab.rows[k],
        x: tab.cols[j],
        y: tab.cols[l],
        entries: [a, b, c, d],
        det,
    })
}

/// Checks total positivity of order two on the tabulation. The first
/// violating quadruple in row-major scan order is reported.
pub fn tp2_check_grid(tab: &Tabulation, tol: f64) -> Result<Tp2Report, Tp2Error> {
    check_axis("row", &tab.rows)?;
    check_axis("column", &tab.cols)?;
    let (nr, nc) = (tab.rows.len(), tab.cols.len());
    if tab.values.len() != nr || tab.values.iter().any(|r| r.len() != nc) {
        return Err(Tp2Error::ShapeMismatch {
            rows: nr,
            cols: nc,
            got_rows: tab.values.len(),
            got_cols: tab.values.first().map_or(0, Vec::len),
        });
    }
    let mut positive = true;
    for (row, r) in tab.values.iter().enumerate() {
        for (col, &value) in r.iter().enumerate() {
            if !value.is_finite() {
                return Err(Tp2Error::NonFinite { row, col });
            }
            if value < 0.0 {
                return Err(Tp2Error::NegativeEntry { row, col, value });
            }
            positive &= value > 0.0;
        }
    }
    if nr < 2 || nc < 2 {
        return Ok(Tp2Report {
            holds: true,
            route: Tp2Route::Adjacent,
            minors_checked: 0,
            violation: None,
        });
    }

    if positive {
        let violation = (0..nr - 1)
            .flat_map(|i| (0..nc - 1).map(move |j| (i, j)))
            .find_map(|(i, j)| minor(tab, i, i + 1, j, j + 1, tol));
        return Ok(Tp2Report {
            holds: violation.is_none(),
            route: Tp2Route::Adjacent,
            minors_checked: ((nr - 1) * (nc - 1)) as u64,
            violation,
        });
    }

    let pairs: Vec<(usize, usize)> = (0..nr).flat_map(|i| (i + 1..nr).map(move |k| (i, k))).collect();
    // find_map_first keeps the reported quadruple deterministic.
    let violation = pairs
        .par_iter()
        .find_map_first(|&(i, k)| (0..nc).find_map(|j| (j + 1..nc).find_map(|l| minor(tab, i, k, j, l, tol))));
    let n = |m: usize| (m * (m - 1) / 2) as u64;
    Ok(Tp2Report {
        holds: violation.is_none(),
        route: Tp2Route::AllMinors,
        minors_checked: n(nr) * n(nc),
        violation,
    })
}

impl Tabulation {
    /// `N(x, y) = sum_k L(x, z_k) M(z_k, y) eta_k`; `self` is `L` over
    /// `(x, z)`, `other` is `M` over `(z, y)` on the same `z` grid.
    pub fn compose(&self, other: &Tabulation, eta: &[f64]) -> Result<Tabulation, Tp2Error> {
        let nz = self.cols.len();
        if other.rows.len() != nz || eta.len() != nz {
            return Err(Tp2Error::ShapeMismatch {
                rows: nz,
                cols: nz,
                got_rows: other.rows.len(),
                got_cols: eta.len(),
            });
        }
        let values = self
            .values
            .iter()
            .map(|lrow| {
                (0..other.cols.len())
                    .map(|j| (0..nz).map(|k| lrow[k] * other.values[k][j] * eta[k]).sum())
                    .collect()
            })
            .collect();
        Ok(Tabulation {
            rows: self.rows.clone(),
            cols: other.cols.clone(),
            values,
        })
    }

    /// Replaces every row strictly between consecutive anchor rows by the
    /// linear interpolation, in the row variable, of the two anchor rows.
    /// Rows outside `[anchors[0], anchors[last]]` are kept.
    pub fn interpolate_rows(&self, anchors: &[usize]) -> Tabulation {
        let mut out = self.clone();
        for w in anchors.windows(2) {
            let (i0, i1) = (w[0], w[1]);
            for i in i0 + 1..i1 {
                out.values[i] = interpolated_row(self, i0, i1, self.rows[i]);
            }
        }
        out
    }
}

fn interpolated_row(tab: &Tabulation, i0: usize, i1: usize, x: f64) -> Vec<f64> {
    let (a0, a1) = (tab.rows[i0], tab.rows[i1]);
    let p = (a1 - x) / (a1 - a0);
    tab.values[i0]
        .iter()
        .zip(&tab.values[i1])
        .map(|(u, v)| p * u + (1.0 - p) * v)
        .collect()
}

/// Position of a row pair relative to one interpolation interval `[a0, a1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationCase {
    BothOutside,
    SecondInside,
    FirstInside,
    BothInside,
}

/// A minor of the interpolated table next to its decomposition
/// `sum_k coef_k * minor_k` into minors of the original table, `coef_k >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorDecomposition {
    pub case: InterpolationCase,
    pub interpolated: f64,
    pub terms: Vec<(f64, f64)>,
}

impl MinorDecomposition {
    pub fn combined(&self) -> f64 {
        self.terms.iter().map(|(c, m)| c * m).sum()
    }
}

/// Minor on rows `x1 < x2` (original row indices) and columns `j < l` of the
/// table interpolated on the anchor rows `i0 < i1`.
pub fn interpolation_decomposition(
    tab: &Tabulation,
    (i0, i1): (usize, usize),
    (x1, x2): (usize, usize),
    (j, l): (usize, usize),
) -> MinorDecomposition {
    let (a0, a1) = (tab.rows[i0], tab.rows[i1]);
    let inside = |i: usize| i0 <= i && i <= i1;
    let row = |i: usize| {
        if inside(i) {
            interpolated_row(tab, i0, i1, tab.rows[i])
        } else {
            tab.values[i].clone()
        }
    };
    let det = |r: &[f64], s: &[f64]| r[j] * s[l] - r[l] * s[j];
    let orig = |i: usize, k: usize| det(&tab.values[i], &tab.values[k]);
    let (u, v) = (row(x1), row(x2));
    let interpolated = det(&u, &v);
    let width = a1 - a0;
    let (y1, y2) = (tab.rows[x1], tab.rows[x2]);
    let (case, terms) = match (inside(x1), inside(x2)) {
        (false, false) => (InterpolationCase::BothOutside, vec![(1.0, orig(x1, x2))]),
        (false, true) => (
            InterpolationCase::SecondInside,
            vec![((y2 - a0) / width, orig(x1, i1)), ((a1 - y2) / width, orig(x1, i0))],
        ),
        (true, false) => (
            InterpolationCase::FirstInside,
            vec![((y1 - a0) / width, orig(i1, x2)), ((a1 - y1) / width, orig(i0, x2))],
        ),
        (true, true) => (InterpolationCase::BothInside, vec![((y2 - y1) / width, orig(i0, i1))]),
    };
    MinorDecomposition {
        case,
        interpolated,
        terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tab(values: Vec<Vec<f64>>) -> Tabulation {
        Tabulation {
            rows: (0..values.len()).map(|i| i as f64).collect(),
            cols: (0..values[0].len()).map(|j| j as f64).collect(),
            values,
        }
    }

    #[test]
    fn exponential_kernel_is_tp2() {
        let values = (0..5)
            .map(|i| (0..7).map(|j| ((i * j) as f64 * 0.3).exp()).collect())
            .collect();
        let r = tp2_check_grid(&tab(values), 1e-9).unwrap();
        assert!(r.holds);
        assert_eq!(r.route, Tp2Route::Adjacent);
    }

    #[test]
    fn reports_first_violation() {
        let r = tp2_check_grid(&tab(vec![vec![1.0, 2.0], vec![3.0, 1.0]]), 1e-9).unwrap();
        let v = r.violation.unwrap();
        assert_eq!((v.s, v.t, v.x, v.y), (0.0, 1.0, 0.0, 1.0));
        assert_eq!(v.det, 1.0 - 6.0);
    }

    #[test]
    fn zeros_force_full_scan() {
        // Adjacent minors are all zero, but rows 0 and 2 violate.
        let values = vec![vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 0.0]];
        let r = tp2_check_grid(&tab(values), 1e-9).unwrap();
        assert_eq!(r.route, Tp2Route::AllMinors);
        assert!(!r.holds);
        assert_eq!(r.violation.unwrap().t, 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            tp2_check_grid(&tab(vec![vec![1.0, -1.0], vec![1.0, 1.0]]), 1e-9),
            Err(Tp2Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        let mut t = tab(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        t.cols = vec![1.0, 1.0];
        assert!(matches!(tp2_check_grid(&t, 1e-9), Err(Tp2Error::UnsortedGrid { .. })));
    }
}
