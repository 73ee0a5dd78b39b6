//! Finite unions of disjoint bounded intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite union of disjoint, sorted, bounded intervals `[lo, hi)`/`[lo, hi]`
/// (endpoint membership never matters for measure or integrals here).
///
/// Touching intervals are merged on construction; overlapping or unsorted
/// input is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalSetRepr", into = "IntervalSetRepr")]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct IntervalSetRepr {
    intervals: Vec<[f64; 2]>,
}

impl From<IntervalSet> for IntervalSetRepr {
    fn from(s: IntervalSet) -> Self {
        IntervalSetRepr {
            intervals: s.ivs.iter().map(|&(lo, hi)| [lo, hi]).collect(),
        }
    }
}

impl TryFrom<IntervalSetRepr> for IntervalSet {
    type Error = Error;
    fn try_from(repr: IntervalSetRepr) -> Result<Self> {
        IntervalSet::new(repr.intervals.iter().map(|&[lo, hi]| (lo, hi)).collect())
    }
}

impl IntervalSet {
    /// Builds a set from intervals that must be finite, sorted, and disjoint.
    /// Intervals that share an endpoint are merged.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let mut ivs: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidIntervalSet(format!(
                    "non-finite endpoint ({lo}, {hi})"
                )));
            }
            if lo >= hi {
                return Err(Error::InvalidIntervalSet(format!(
                    "interval ({lo}, {hi}) has lo >= hi"
                )));
            }
            if let Some(&(plo, phi)) = ivs.last() {
                if lo < plo || lo < phi {
                    return Err(Error::InvalidIntervalSet(format!(
                        "interval ({lo}, {hi}) overlaps or precedes ({plo}, {phi})"
                    )));
                }
                if lo == phi {
                    ivs.last_mut().unwrap().1 = hi;
                    continue;
                }
            }
            ivs.push((lo, hi));
        }
        Ok(IntervalSet { ivs })
    }

    pub fn empty() -> Self {
        IntervalSet { ivs: Vec::new() }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    /// Total Lebesgue measure: the sum of interval lengths.
    pub fn measure(&self) -> f64 {
        self.ivs.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Smallest interval containing the set, `None` when empty.
    pub fn hull(&self) -> Option<(f64, f64)> {
        match (self.ivs.first(), self.ivs.last()) {
            (Some(&(lo, _)), Some(&(_, hi))) => Some((lo, hi)),
            _ => None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidIntervalSet(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("interval set serializes")
    }
}
