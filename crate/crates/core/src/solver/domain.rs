use alloc::vec::Vec;
use core::fmt;

use crate::IntWidth;

/// Interval count beyond which a domain collapses to its hull.
pub const MAX_INTERVALS: usize = 64;

/// A finite set of integers stored as sorted, disjoint, non-adjacent closed
/// intervals.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Domain {
    iv: Vec<(i64, i64)>,
}

impl Domain {
    pub fn empty() -> Self {
        Domain { iv: Vec::new() }
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        if lo > hi {
            Self::empty()
        } else {
            Domain {
                iv: alloc::vec![(lo, hi)],
            }
        }
    }

    pub fn singleton(v: i64) -> Self {
        Self::range(v, v)
    }

    pub fn full(width: IntWidth) -> Self {
        Self::range(width.min_int(), width.max_int())
    }

    pub fn from_intervals(it: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut iv: Vec<(i64, i64)> = it.into_iter().filter(|(a, b)| a <= b).collect();
        iv.sort_unstable();
        let mut out: Vec<(i64, i64)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match out.last_mut() {
                Some(last) if a <= last.1.saturating_add(1) => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self::capped(out)
    }

    pub fn from_values(it: impl IntoIterator<Item = i64>) -> Self {
        Self::from_intervals(it.into_iter().map(|v| (v, v)))
    }

    fn capped(iv: Vec<(i64, i64)>) -> Self {
        if iv.len() > MAX_INTERVALS {
            Self::range(iv[0].0, iv[iv.len() - 1].1)
        } else {
            Domain { iv }
        }
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.iv
    }

    pub fn is_empty(&self) -> bool {
        self.iv.is_empty()
    }

    /// Smallest member. Panics on the empty domain.
    pub fn min(&self) -> i64 {
        self.iv[0].0
    }

    /// Largest member. Panics on the empty domain.
    pub fn max(&self) -> i64 {
        self.iv[self.iv.len() - 1].1
    }

    pub fn size(&self) -> u64 {
        self.iv.iter().map(|(a, b)| (b - a) as u64 + 1).sum()
    }

    pub fn value(&self) -> Option<i64> {
        match self.iv[..] {
            [(a, b)] if a == b => Some(a),
            _ => None,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.value().is_some()
    }

    pub fn contains(&self, v: i64) -> bool {
        let i = self.iv.partition_point(|&(_, b)| b < v);
        i < self.iv.len() && self.iv[i].0 <= v
    }

    pub fn hull(&self) -> Domain {
        if self.is_empty() {
            Self::empty()
        } else {
            Self::range(self.min(), self.max())
        }
    }

    pub fn intersect(&self, other: &Domain) -> Domain {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.iv.len() && j < other.iv.len() {
            let (a0, a1) = self.iv[i];
            let (b0, b1) = other.iv[j];
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if lo <= hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::capped(out)
    }

    pub fn union(&self, other: &Domain) -> Domain {
        Self::from_intervals(self.iv.iter().chain(&other.iv).copied())
    }

    pub fn restrict(&self, lo: i64, hi: i64) -> Domain {
        self.intersect(&Self::range(lo, hi))
    }

    pub fn remove(&self, v: i64) -> Domain {
        self.remove_range(v, v)
    }

    pub fn remove_range(&self, lo: i64, hi: i64) -> Domain {
        if lo > hi {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.iv.len() + 1);
        for &(a, b) in &self.iv {
            if b < lo || a > hi {
                out.push((a, b));
                continue;
            }
            if a < lo {
                out.push((a, lo - 1));
            }
            if b > hi {
                out.push((hi + 1, b));
            }
        }
        Self::capped(out)
    }

    /// `{ v + c | v ∈ self }`
    pub fn shift(&self, c: i64) -> Domain {
        Domain {
            iv: self.iv.iter().map(|&(a, b)| (a + c, b + c)).collect(),
        }
    }

    /// `{ -v | v ∈ self }`
    pub fn negate(&self) -> Domain {
        Domain {
            iv: self.iv.iter().rev().map(|&(a, b)| (-b, -a)).collect(),
        }
    }

    pub fn is_subset(&self, other: &Domain) -> bool {
        self.intersect(other) == *self
    }

    pub fn next_ge(&self, v: i64) -> Option<i64> {
        let i = self.iv.partition_point(|&(_, b)| b < v);
        self.iv.get(i).map(|&(a, _)| a.max(v))
    }

    pub fn prev_le(&self, v: i64) -> Option<i64> {
        let i = self.iv.partition_point(|&(a, _)| a <= v);
        i.checked_sub(1).map(|i| self.iv[i].1.min(v))
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.iv.iter().flat_map(|&(a, b)| a..=b)
    }

    /// Members ordered 0, 1, -1, 2, -2, ...
    pub fn by_magnitude(&self) -> ByMagnitude<'_> {
        ByMagnitude {
            dom: self,
            pos: self.next_ge(0),
            neg: self.prev_le(-1),
        }
    }
}

pub struct ByMagnitude<'a> {
    dom: &'a Domain,
    pos: Option<i64>,
    neg: Option<i64>,
}

impl Iterator for ByMagnitude<'_> {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        let take_pos = match (self.pos, self.neg) {
            (Some(p), Some(n)) => p <= -n,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => return None,
        };
        if take_pos {
            let p = self.pos?;
            self.pos = p.checked_add(1).and_then(|q| self.dom.next_ge(q));
            Some(p)
        } else {
            let n = self.neg?;
            self.neg = n.checked_sub(1).and_then(|q| self.dom.prev_le(q));
            Some(n)
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        if self.iv.iter().all(|(a, b)| a == b) {
            f.write_str("{")?;
            for (i, (a, _)) in self.iv.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            return f.write_str("}");
        }
        for (i, (a, b)) in self.iv.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            if a == b {
                write!(f, "{{{a}}}")?;
            } else {
                write!(f, "[{a},{b}]")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
