//! Finite unions of open intervals with exact measure arithmetic.
//!
//! Used for the exceptional time set E and for the good/bad-set bookkeeping
//! of the energy schedule.

use serde::{Deserialize, Serialize};

/// Normalized (sorted, disjoint) finite union of open intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Build from arbitrary (possibly overlapping, unsorted) intervals;
    /// empty or inverted intervals are dropped.
    pub fn new(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|(a, b)| b > a);
        raw.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match merged.last_mut() {
                Some((_, pb)) if a <= *pb => *pb = pb.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { intervals: merged }
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < t && t < b)
    }

    /// Lebesgue measure of the whole union.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Measure of the union intersected with [lo, hi].
    pub fn measure_within(&self, lo: f64, hi: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }

    /// Union with another set.
    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::new(all)
    }

    /// Complement within [lo, hi] (as closed gaps turned into open intervals).
    pub fn complement_within(&self, lo: f64, hi: f64) -> Self {
        let mut out = Vec::new();
        let mut cursor = lo;
        for &(a, b) in &self.intervals {
            if b <= lo {
                continue;
            }
            if a >= hi {
                break;
            }
            if a > cursor {
                out.push((cursor, a.min(hi)));
            }
            cursor = cursor.max(b);
        }
        if cursor < hi {
            out.push((cursor, hi));
        }
        Self::new(out)
    }

    /// Distance from `t` to the set's complement within [lo, hi]
    /// (i.e. how deep inside the set `t` sits; 0 if t is outside).
    pub fn depth(&self, t: f64) -> f64 {
        self.intervals
            .iter()
            .filter(|&&(a, b)| a < t && t < b)
            .map(|&(a, b)| (t - a).min(b - t))
            .next_back()
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_measure() {
        let s = IntervalSet::new(vec![(0.5, 0.7), (0.1, 0.3), (0.25, 0.55), (0.9, 0.8)]);
        assert_eq!(s.components(), &[(0.1, 0.7)]);
        assert!((s.measure() - 0.6).abs() < 1e-15);
        assert!((s.measure_within(0.0, 0.4) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn complement() {
        let s = IntervalSet::new(vec![(0.2, 0.4), (0.6, 0.7)]);
        let c = s.complement_within(0.0, 1.0);
        assert_eq!(c.components(), &[(0.0, 0.2), (0.4, 0.6), (0.7, 1.0)]);
        assert!((s.measure() + c.measure() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn contains_and_depth() {
        let s = IntervalSet::new(vec![(0.2, 0.4)]);
        assert!(s.contains(0.3));
        assert!(!s.contains(0.5));
        assert!((s.depth(0.25) - 0.05).abs() < 1e-15);
        assert_eq!(s.depth(0.5), 0.0);
    }
}
