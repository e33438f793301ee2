//! Finite unions of disjoint intervals with open/closed endpoint flags.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::serde_ext::ext")]
    pub lo: f64,
    #[serde(with = "crate::serde_ext::ext")]
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// The half-open `(lo, hi]` cell used by left-continuous densities.
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: true }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn point(x: f64) -> Self {
        Interval::closed(x, x)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    /// Number of points of the sorted slice `xs` lying in the interval.
    pub fn count_sorted(&self, xs: &[f64]) -> usize {
        let upto = if self.hi_closed {
            xs.partition_point(|&x| x <= self.hi)
        } else {
            xs.partition_point(|&x| x < self.hi)
        };
        let before = if self.lo_closed {
            xs.partition_point(|&x| x < self.lo)
        } else {
            xs.partition_point(|&x| x <= self.lo)
        };
        upto.saturating_sub(before)
    }
}

/// Disjoint, sorted intervals; adjacent pieces that touch at a shared,
/// included endpoint are merged so that `count` returns maximal intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    /// Builds a union from intervals already sorted left to right.
    pub fn from_sorted(items: impl IntoIterator<Item = Interval>) -> crate::Result<Self> {
        let mut u = IntervalUnion::empty();
        for iv in items {
            if let Some(last) = u.intervals.last() {
                if iv.lo < last.hi {
                    return crate::domain("intervals overlap or are unsorted");
                }
            }
            u.push(iv);
        }
        Ok(u)
    }

    /// Appends an interval lying to the right of everything already present.
    pub fn push(&mut self, iv: Interval) {
        if iv.is_empty() {
            return;
        }
        if let Some(last) = self.intervals.last_mut() {
            if last.hi == iv.lo && (last.hi_closed || iv.lo_closed) {
                if iv.hi > last.hi || (iv.hi == last.hi && iv.hi_closed) {
                    last.hi = iv.hi;
                    last.hi_closed = iv.hi_closed || (iv.hi == iv.lo && last.hi_closed);
                }
                return;
            }
        }
        self.intervals.push(iv);
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Number of maximal intervals.
    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.hi < x);
        self.intervals[i..].iter().take(2).any(|iv| iv.contains(x))
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    /// Number of points of the sorted slice `xs` inside the union.
    pub fn count_sorted(&self, xs: &[f64]) -> usize {
        self.intervals.iter().map(|iv| iv.count_sorted(xs)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging_at_included_endpoints() {
        let mut u = IntervalUnion::empty();
        u.push(Interval::left_open(0.0, 1.0));
        u.push(Interval::left_open(1.0, 2.0));
        assert_eq!(u.count(), 1);
        assert_eq!(u.intervals()[0], Interval::left_open(0.0, 2.0));
        u.push(Interval::open(2.0, 3.0));
        assert_eq!(u.count(), 1);
        u.push(Interval::open(3.0, 4.0));
        assert_eq!(u.count(), 2, "a missing point separates maximal intervals");
    }

    #[test]
    fn point_closes_open_end() {
        let mut u = IntervalUnion::empty();
        u.push(Interval::open(0.0, 1.0));
        u.push(Interval::point(1.0));
        u.push(Interval::open(1.0, 2.0));
        assert_eq!(u.count(), 1);
        assert!(u.contains(1.0));
        assert!(!u.contains(2.0));
    }

    #[test]
    fn counting_respects_flags() {
        let xs = [0.0, 0.5, 1.0, 1.0, 1.5, 2.0];
        assert_eq!(Interval::left_open(0.0, 1.0).count_sorted(&xs), 3);
        assert_eq!(Interval::closed(0.0, 1.0).count_sorted(&xs), 4);
        assert_eq!(Interval::open(0.0, 1.0).count_sorted(&xs), 1);
        assert_eq!(Interval::open(1.0, f64::INFINITY).count_sorted(&xs), 2);
    }

    #[test]
    fn rejects_overlap() {
        let r = IntervalUnion::from_sorted([Interval::open(0.0, 2.0), Interval::open(1.0, 3.0)]);
        assert!(r.is_err());
    }
}
