//! Subordination of a family by a tabulated TP2 mixing kernel.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Provenance, TransformError, TransformedFamily};
use crate::measures::{Measure, MeasureFamily};
use crate::orderings::{tp2_check_grid, Tabulation, DEFAULT_TOL};

/// Row sums must equal one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Family times and `lambda_grid` are matched within this tolerance.
pub const GRID_MATCH_TOL: f64 = 1e-12;

/// Discrete weights `p_t(lambda)`; every row is a probability vector and
/// `(t, lambda) -> p_t(lambda)` is TP2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRecord", into = "KernelRecord")]
pub struct MixingKernel {
    table: Tabulation,
}

#[derive(Serialize, Deserialize)]
struct KernelRecord {
    t_grid: Vec<f64>,
    lambda_grid: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<KernelRecord> for MixingKernel {
    type Error = TransformError;
    fn try_from(r: KernelRecord) -> Result<Self, Self::Error> {
        MixingKernel::new(r.t_grid, r.lambda_grid, r.values)
    }
}

impl From<MixingKernel> for KernelRecord {
    fn from(k: MixingKernel) -> Self {
        KernelRecord {
            t_grid: k.table.rows,
            lambda_grid: k.table.cols,
            values: k.table.values,
        }
    }
}

impl MixingKernel {
    pub fn new(t_grid: Vec<f64>, lambda_grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, TransformError> {
        if let Some(l) = lambda_grid.iter().find(|l| !(**l >= 0.0)) {
            return Err(TransformError::InvalidKernel(format!("lambda {l} is negative")));
        }
        let table = Tabulation {
            rows: t_grid,
            cols: lambda_grid,
            values,
        };
        let report = tp2_check_grid(&table, DEFAULT_TOL)?;
        if let Some(v) = report.violation {
            return Err(TransformError::KernelNotTP2(Box::new(v)));
        }
        for (i, row) in table.values.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(TransformError::InvalidKernel(format!("row {i} sums to {sum}")));
            }
        }
        Ok(MixingKernel { table })
    }

    /// Row `i` is the point mass at `lambda_grid[i]`.
    pub fn one_hot(t_grid: Vec<f64>, lambda_grid: Vec<f64>) -> Result<Self, TransformError> {
        let n = lambda_grid.len();
        let values = (0..t_grid.len())
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        MixingKernel::new(t_grid, lambda_grid, values)
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.table.rows
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.table.cols
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.table.values
    }
}

/// `mu^X_t = sum_lambda p_t(lambda) mu^Y_lambda` for every kernel time.
/// The WDS order of `fam_y` is the caller's precondition.
pub fn subordinate(fam_y: &MeasureFamily, kernel: &MixingKernel) -> Result<TransformedFamily, TransformError> {
    let times = fam_y.times();
    let lambdas = kernel.lambda_grid();
    let matches = times.len() == lambdas.len()
        && times
            .iter()
            .zip(lambdas)
            .all(|(a, b)| (a - b).abs() <= GRID_MATCH_TOL * a.abs().max(1.0));
    if !matches {
        return Err(TransformError::GridMismatch(format!(
            "family times {times:?} differ from lambda grid {lambdas:?}"
        )));
    }
    let entries = kernel
        .t_grid()
        .iter()
        .zip(kernel.values())
        .map(|(&t, row)| {
            let parts: Vec<(f64, &Measure)> = row.iter().copied().zip(fam_y.measures()).collect();
            Ok((t, Measure::mixture(&parts)?))
        })
        .collect::<Result<Vec<_>, TransformError>>()?;
    Ok(TransformedFamily {
        family: MeasureFamily::new(entries)?,
        provenance: Provenance {
            transform: "subordinate".into(),
            params: json!({ "t_grid": kernel.t_grid(), "lambda_grid": lambdas }),
            renormalization: None,
        },
    })
}
