use thiserror::Error;

use super::Measure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("a family needs at least 2 entries, got {0}")]
    TooFew(usize),
    #[error("family times must be strictly increasing (entry {0})")]
    UnsortedTimes(usize),
    #[error("family time at entry {0} is not finite")]
    NonFiniteTime(usize),
}

/// A time-indexed family of measures evaluated on a finite, strictly
/// increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFamily {
    entries: Vec<(f64, Measure)>,
}

impl MeasureFamily {
    pub fn new(entries: Vec<(f64, Measure)>) -> Result<Self, FamilyError> {
        if entries.len() < 2 {
            return Err(FamilyError::TooFew(entries.len()));
        }
        for (i, (t, _)) in entries.iter().enumerate() {
            if !t.is_finite() {
                return Err(FamilyError::NonFiniteTime(i));
            }
            if i > 0 && entries[i - 1].0 >= *t {
                return Err(FamilyError::UnsortedTimes(i));
            }
        }
        Ok(MeasureFamily { entries })
    }

    pub fn entries(&self) -> &[(f64, Measure)] {
        &self.entries
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, t: f64) -> Option<&Measure> {
        self.entries.iter().find(|e| e.0 == t).map(|e| &e.1)
    }

    pub fn measures(&self) -> impl Iterator<Item = &Measure> {
        self.entries.iter().map(|e| &e.1)
    }

    /// Applies `f` to every member, keeping the time grid.
    pub fn map<E>(&self, mut f: impl FnMut(f64, &Measure) -> Result<Measure, E>) -> Result<Self, E> {
        let entries = self
            .entries
            .iter()
            .map(|(t, m)| Ok((*t, f(*t, m)?)))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(MeasureFamily { entries })
    }

    pub fn into_entries(self) -> Vec<(f64, Measure)> {
        self.entries
    }
}
