//! Finite integer domains stored as ordered interval lists.
//!
//! A [`FiniteDomain`] is a set of integers in `0..=FULL_MAX` kept as strictly
//! ascending, non-adjacent inclusive intervals. Every constructor and set
//! operation returns a normalized value, so two domains are equal exactly when
//! their interval lists are equal.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Upper bound of the full domain, `2^28 - 1`.
pub const FULL_MAX: u32 = 268_435_455;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FiniteDomain {
    intervals: Vec<(u32, u32)>,
}

impl FiniteDomain {
    pub fn empty() -> Self {
        FiniteDomain { intervals: Vec::new() }
    }

    /// `0..=FULL_MAX`.
    pub fn full() -> Self {
        Self::range(0, FULL_MAX)
    }

    /// `lo..=hi`, or the empty domain when `lo > hi`.
    pub fn range(lo: u32, hi: u32) -> Self {
        if lo > hi {
            Self::empty()
        } else {
            FiniteDomain { intervals: vec![(lo, hi)] }
        }
    }

    pub fn singleton(v: u32) -> Self {
        FiniteDomain { intervals: vec![(v, v)] }
    }

    /// Builds a domain from arbitrary (possibly overlapping, unsorted) intervals.
    /// Pairs with `lo > hi` are ignored.
    pub fn from_intervals<I: IntoIterator<Item = (u32, u32)>>(items: I) -> Self {
        let mut raw: Vec<(u32, u32)> = items.into_iter().filter(|&(lo, hi)| lo <= hi).collect();
        raw.sort_unstable();
        let mut intervals: Vec<(u32, u32)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match intervals.last_mut() {
                Some(last) if lo as u64 <= last.1 as u64 + 1 => last.1 = last.1.max(hi),
                _ => intervals.push((lo, hi)),
            }
        }
        FiniteDomain { intervals }
    }

    pub fn from_values<I: IntoIterator<Item = u32>>(values: I) -> Self {
        Self::from_intervals(values.into_iter().map(|v| (v, v)))
    }

    pub fn intervals(&self) -> &[(u32, u32)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Cardinality.
    pub fn size(&self) -> u64 {
        self.intervals.iter().map(|&(lo, hi)| (hi - lo) as u64 + 1).sum()
    }

    pub fn min(&self) -> Option<u32> {
        self.intervals.first().map(|&(lo, _)| lo)
    }

    pub fn max(&self) -> Option<u32> {
        self.intervals.last().map(|&(_, hi)| hi)
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self.intervals.as_slice(), [(lo, hi)] if lo == hi)
    }

    /// The value of a singleton domain.
    pub fn value(&self) -> Option<u32> {
        match self.intervals.as_slice() {
            [(lo, hi)] if lo == hi => Some(*lo),
            _ => None,
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        // Binary search on interval lower bounds.
        let idx = self.intervals.partition_point(|&(lo, _)| lo <= v);
        idx > 0 && self.intervals[idx - 1].1 >= v
    }

    pub fn is_subset(&self, other: &FiniteDomain) -> bool {
        self.difference(other).is_empty()
    }

    /// The `k`-th smallest value (0-based).
    pub fn nth(&self, mut k: u64) -> Option<u32> {
        for &(lo, hi) in &self.intervals {
            let len = (hi - lo) as u64 + 1;
            if k < len {
                return Some(lo + k as u32);
            }
            k -= len;
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.intervals.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    /// `self \ w`. `w` need not be a subset of `self`.
    pub fn difference(&self, w: &FiniteDomain) -> FiniteDomain {
        let ws = &w.intervals;
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut j = 0;
        for &(lo, hi) in &self.intervals {
            while j < ws.len() && ws[j].1 < lo {
                j += 1;
            }
            let mut start = lo as u64;
            let mut k = j;
            while k < ws.len() && ws[k].0 <= hi {
                let (wl, wh) = ws[k];
                if wl as u64 > start {
                    out.push((start as u32, wl - 1));
                }
                start = start.max(wh as u64 + 1);
                if wh >= hi {
                    break;
                }
                k += 1;
            }
            if start <= hi as u64 {
                out.push((start as u32, hi));
            }
            j = k;
        }
        FiniteDomain { intervals: out }
    }

    pub fn intersection(&self, other: &FiniteDomain) -> FiniteDomain {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        FiniteDomain { intervals: out }
    }

    pub fn union(&self, other: &FiniteDomain) -> FiniteDomain {
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    /// Values `>= lo`.
    pub fn restrict_min(&self, lo: u32) -> FiniteDomain {
        let mut intervals: Vec<(u32, u32)> = self.intervals.iter().copied().filter(|&(_, hi)| hi >= lo).collect();
        if let Some(first) = intervals.first_mut() {
            first.0 = first.0.max(lo);
        }
        FiniteDomain { intervals }
    }

    /// Values `<= hi`.
    pub fn restrict_max(&self, hi: u32) -> FiniteDomain {
        let mut intervals: Vec<(u32, u32)> = self.intervals.iter().copied().filter(|&(lo, _)| lo <= hi).collect();
        if let Some(last) = intervals.last_mut() {
            last.1 = last.1.min(hi);
        }
        FiniteDomain { intervals }
    }

    pub fn without_value(&self, v: u32) -> FiniteDomain {
        let idx = self.intervals.partition_point(|&(lo, _)| lo <= v);
        if idx == 0 || self.intervals[idx - 1].1 < v {
            return self.clone();
        }
        let (lo, hi) = self.intervals[idx - 1];
        let mut intervals = Vec::with_capacity(self.intervals.len() + 1);
        intervals.extend_from_slice(&self.intervals[..idx - 1]);
        if lo < v {
            intervals.push((lo, v - 1));
        }
        if v < hi {
            intervals.push((v + 1, hi));
        }
        intervals.extend_from_slice(&self.intervals[idx..]);
        FiniteDomain { intervals }
    }
}

impl fmt::Display for FiniteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, &(lo, hi)) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}-{hi}")?;
            }
        }
        f.write_str("]")
    }
}

impl fmt::Debug for FiniteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed domain at column {}: {message}", .offset + 1)]
pub struct DomainParseError {
    /// Byte offset into the parsed text.
    pub offset: usize,
    pub message: String,
}

impl DomainParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        DomainParseError { offset, message: message.into() }
    }
}

/// Parses the bracketed domain grammar, e.g. `[0-1,3-4,6]`.
pub fn parse_domain(text: &str) -> Result<FiniteDomain, DomainParseError> {
    let inner = text.strip_prefix('[').ok_or_else(|| DomainParseError::new(0, "expected '['"))?;
    let inner = inner.strip_suffix(']').ok_or_else(|| DomainParseError::new(text.len(), "expected closing ']'"))?;
    parse_items(inner, 1)
}

/// Parses a bare comma-separated item list (`1-3,7`), as used after `var x in`.
/// `base` is the offset of `text` inside the enclosing input, for error columns.
pub fn parse_items(text: &str, base: usize) -> Result<FiniteDomain, DomainParseError> {
    if text.is_empty() {
        return Ok(FiniteDomain::empty());
    }
    let mut items = Vec::new();
    let mut offset = base;
    for item in text.split(',') {
        let (lo, hi) = match item.split_once('-') {
            Some((a, b)) => {
                let lo = parse_int(a, offset)?;
                let hi = parse_int(b, offset + a.len() + 1)?;
                if lo > hi {
                    return Err(DomainParseError::new(offset, format!("empty interval {lo}-{hi}")));
                }
                (lo, hi)
            }
            None => {
                let v = parse_int(item, offset)?;
                (v, v)
            }
        };
        items.push((lo, hi));
        offset += item.len() + 1;
    }
    Ok(FiniteDomain::from_intervals(items))
}

fn parse_int(text: &str, offset: usize) -> Result<u32, DomainParseError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(DomainParseError::new(offset, format!("expected integer, found {text:?}")));
    }
    let v: u64 = text.parse().map_err(|_| DomainParseError::new(offset, format!("integer {text} out of range")))?;
    if v > FULL_MAX as u64 {
        return Err(DomainParseError::new(offset, format!("{v} exceeds {FULL_MAX}")));
    }
    Ok(v as u32)
}

impl FromStr for FiniteDomain {
    type Err = DomainParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_domain(s)
    }
}

/// Kinds of domain modification reported with each reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UpdateKind {
    Min,
    Max,
    Ground,
    Any,
    Empty,
}

impl UpdateKind {
    pub const ALL: [UpdateKind; 5] =
        [UpdateKind::Min, UpdateKind::Max, UpdateKind::Ground, UpdateKind::Any, UpdateKind::Empty];

    pub fn name(self) -> &'static str {
        match self {
            UpdateKind::Min => "min",
            UpdateKind::Max => "max",
            UpdateKind::Ground => "ground",
            UpdateKind::Any => "any",
            UpdateKind::Empty => "empty",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UpdateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UpdateKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown update kind {s:?}"))
    }
}

/// A set of [`UpdateKind`]s, iterated in the order min, max, ground, any, empty.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct UpdateKinds(u8);

impl UpdateKinds {
    pub const NONE: UpdateKinds = UpdateKinds(0);

    pub fn of(kinds: &[UpdateKind]) -> Self {
        kinds.iter().fold(Self::NONE, |acc, &k| acc.with(k))
    }

    pub fn with(self, k: UpdateKind) -> Self {
        UpdateKinds(self.0 | k.bit())
    }

    pub fn contains(self, k: UpdateKind) -> bool {
        self.0 & k.bit() != 0
    }

    pub fn union(self, other: UpdateKinds) -> Self {
        UpdateKinds(self.0 | other.0)
    }

    pub fn intersects(self, other: UpdateKinds) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = UpdateKind> {
        UpdateKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }

    pub fn to_vec(self) -> Vec<UpdateKind> {
        self.iter().collect()
    }
}

impl fmt::Display for UpdateKinds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, k) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(k.name())?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for UpdateKinds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for UpdateKinds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| format!("expected bracketed kind list, found {s:?}"))?;
        if inner.is_empty() {
            return Ok(Self::NONE);
        }
        inner.split(',').try_fold(Self::NONE, |acc, name| Ok(acc.with(name.parse()?)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("classify_update contract violated: {new} is not a strict subset of {old}")]
pub struct ContractError {
    pub old: FiniteDomain,
    pub new: FiniteDomain,
}

/// Classifies a strict reduction `old -> new`.
///
/// `empty` alone when `new` is empty; otherwise `min`/`max` when the bound
/// moved, `ground` when `new` is a singleton, and `any` when neither bound
/// moved.
pub fn classify_update(old: &FiniteDomain, new: &FiniteDomain) -> Result<UpdateKinds, ContractError> {
    if new == old || !new.is_subset(old) {
        return Err(ContractError { old: old.clone(), new: new.clone() });
    }
    Ok(classify_bounds(old, new))
}

/// [`classify_update`] without the subset check; the caller guarantees `new ⊊ old`.
pub(crate) fn classify_bounds(old: &FiniteDomain, new: &FiniteDomain) -> UpdateKinds {
    let (Some(new_min), Some(new_max)) = (new.min(), new.max()) else {
        return UpdateKinds::NONE.with(UpdateKind::Empty);
    };
    let mut kinds = UpdateKinds::NONE;
    let min_moved = old.min().is_some_and(|m| new_min > m);
    let max_moved = old.max().is_some_and(|m| new_max < m);
    if min_moved {
        kinds = kinds.with(UpdateKind::Min);
    }
    if max_moved {
        kinds = kinds.with(UpdateKind::Max);
    }
    if new_min == new_max {
        kinds = kinds.with(UpdateKind::Ground);
    }
    if !min_moved && !max_moved {
        kinds = kinds.with(UpdateKind::Any);
    }
    kinds
}
