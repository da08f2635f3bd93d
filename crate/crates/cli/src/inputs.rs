//! Parsing of family, measure, example and grid arguments.

use std::path::Path;

use wds_core::measures::io::{family_from_json, measure_from_json};
use wds_core::measures::{Measure, MeasureFamily};
use wds_core::orderings::default_grid;
use wds_core::transforms::{example_family, Example};

use crate::manifest::Recorder;
use crate::CliError;

/// Built-in families by name: `discrete-k<k>`, `density-k<k>`, `two-atom`,
/// `translated`, `peacock`.
pub fn parse_example(name: &str) -> Result<Example, CliError> {
    let k = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<u32>().ok());
    if let Some(k) = k("discrete-k") {
        return Ok(Example::Discrete { k });
    }
    if let Some(k) = k("density-k") {
        return Ok(Example::Density { k });
    }
    match name {
        "two-atom" => Ok(Example::TwoAtom),
        "translated" => Ok(Example::Translated),
        "peacock" => Ok(Example::Peacock {
            mean: -1.0,
            half_points: 60,
        }),
        _ => Err(CliError::Input(format!(
            "unknown example {name:?} (expected discrete-k<k>, density-k<k>, two-atom, translated or peacock)"
        ))),
    }
}

pub fn builtin_family(name: &str) -> Result<MeasureFamily, CliError> {
    let ex = parse_example(name)?;
    example_family(&ex, &ex.default_times()).map_err(|e| CliError::Input(e.to_string()))
}

/// A family file, or a single measure file read as the family `{0: m}`.
pub fn read_family(path: &Path, rec: &mut Recorder) -> Result<MeasureFamily, CliError> {
    let text = rec.read_input(path)?;
    read_family_text(&text, path)
}

pub fn read_family_text(text: &str, path: &Path) -> Result<MeasureFamily, CliError> {
    match family_from_json(text) {
        Ok(f) => Ok(f),
        Err(family_err) => match measure_from_json(text) {
            Ok(m) => Ok(MeasureFamily::new(vec![(0.0, m)]).expect("one member")),
            Err(_) => Err(CliError::Input(format!("{}: {family_err}", path.display()))),
        },
    }
}

pub fn read_measure(path: &Path, rec: &mut Recorder) -> Result<Measure, CliError> {
    let text = rec.read_input(path)?;
    measure_from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `auto` (the default comparison grid), `lo:hi:n`, or `x1,x2,...`.
pub fn parse_grid(spec: &str, m: &Measure) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("bad grid spec {spec:?} (expected auto, lo:hi:n or x1,x2,...)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if spec == "auto" {
        return Ok(default_grid(&[m]));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = if parts.len() == 3 {
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(bad());
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<f64>, _>>()?
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_and_grids() {
        assert_eq!(parse_example("discrete-k2").unwrap(), Example::Discrete { k: 2 });
        assert!(parse_example("discrete-kx").is_err());
        assert_eq!(builtin_family("two-atom").unwrap().len(), 3);
        let m = Measure::dirac(-1.0);
        assert_eq!(parse_grid("0:1:3", &m).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("-1, 2", &m).unwrap(), vec![-1.0, 2.0]);
        assert!(parse_grid("1:0:3", &m).is_err());
        assert!(parse_grid("a,b", &m).is_err());
        assert!(!parse_grid("auto", &m).unwrap().is_empty());
    }
}
