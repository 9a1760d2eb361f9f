//! Proper filters over a finite index set, stored extensionally as bitmask
//! sets. Over a finite index set every filter is principal, generated by the
//! intersection of its members (the core); the representation stays fully
//! extensional so the filter laws can be checked as exact set operations.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_INDEX_SIZE: usize = 16;

/// A subset of `{0..n-1}` as a bitmask.
pub type IndexSet = u32;

pub fn index_set(indices: &[usize]) -> IndexSet {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn set_elements(mask: IndexSet, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn format_set(mask: IndexSet, n: usize) -> String {
    let parts: Vec<String> = set_elements(mask, n).iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// A proper filter over `{0..index_size-1}`: contains the full set, is
/// upward closed, closed under pairwise intersection, and omits the empty set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterOnFiniteSet {
    index_size: usize,
    members: Vec<IndexSet>,
}

impl FilterOnFiniteSet {
    /// Builds the filter generated by `gens`: all supersets of intersections
    /// of finite subfamilies (the empty subfamily giving the full set).
    /// Errors when the family lacks the finite intersection property and
    /// reports an empty-intersection subfamily.
    pub fn from_generators(index_size: usize, gens: &[IndexSet]) -> Result<FilterOnFiniteSet> {
        if index_size == 0 || index_size > MAX_INDEX_SIZE {
            return Err(Error::Usage(format!(
                "index size must be between 1 and {MAX_INDEX_SIZE}, got {index_size}"
            )));
        }
        let full: IndexSet = ((1u64 << index_size) - 1) as IndexSet;
        for &g in gens {
            if g & !full != 0 {
                return Err(Error::OutOfRange {
                    value: (g & !full).trailing_zeros() as usize,
                    universe: index_size,
                });
            }
        }
        // The total intersection is the intersection of the worst subfamily,
        // so FIP holds iff it is nonempty. For the report, walk the family
        // keeping generators that strictly shrink the running intersection.
        let mut core = full;
        let mut shrinkers: Vec<IndexSet> = Vec::new();
        for &g in gens {
            if core & g != core {
                shrinkers.push(g);
                core &= g;
            }
            if core == 0 {
                let parts: Vec<String> = shrinkers
                    .iter()
                    .map(|&s| format_set(s, index_size))
                    .collect();
                return Err(Error::FipViolation(format!(
                    "{} have empty intersection",
                    parts.join(" ∩ ")
                )));
            }
        }
        let members = (0..=full)
            .filter(|&m| m & core == core)
            .collect();
        Ok(FilterOnFiniteSet {
            index_size,
            members,
        })
    }

    /// The filter `{X : X ⊇ base}`.
    pub fn principal(index_size: usize, base: IndexSet) -> Result<FilterOnFiniteSet> {
        if base == 0 {
            return Err(Error::FipViolation("principal base is empty".into()));
        }
        FilterOnFiniteSet::from_generators(index_size, &[base])
    }

    /// The trivial filter `{I}`.
    pub fn trivial(index_size: usize) -> FilterOnFiniteSet {
        FilterOnFiniteSet::from_generators(index_size, &[])
            .expect("the empty family always generates")
    }

    /// Every proper filter over `{0..n-1}`, one per nonempty core, in
    /// ascending core order. Over a finite set all filters are principal,
    /// so this enumeration is exhaustive.
    pub fn all_filters(index_size: usize) -> Vec<FilterOnFiniteSet> {
        let full: IndexSet = ((1u64 << index_size) - 1) as IndexSet;
        (1..=full)
            .map(|core| FilterOnFiniteSet::principal(index_size, core).unwrap())
            .collect()
    }

    pub fn index_size(&self) -> usize {
        self.index_size
    }

    pub fn full_set(&self) -> IndexSet {
        ((1u64 << self.index_size) - 1) as IndexSet
    }

    pub fn members(&self) -> &[IndexSet] {
        &self.members
    }

    pub fn contains(&self, set: IndexSet) -> bool {
        set & self.core() == self.core() && set & !self.full_set() == 0
    }

    /// The intersection of all members; itself a member.
    pub fn core(&self) -> IndexSet {
        self.members.iter().fold(self.full_set(), |a, &b| a & b)
    }

    /// Checks the filter laws extensionally: full-set membership, upward
    /// closure, pairwise intersection closure, and properness.
    pub fn verify_laws(&self) -> Result<()> {
        let full = self.full_set();
        let has = |m: IndexSet| self.members.binary_search(&m).is_ok();
        if !has(full) {
            return Err(Error::Internal("filter misses the full set".into()));
        }
        if has(0) {
            return Err(Error::Internal("filter contains the empty set".into()));
        }
        for &m in &self.members {
            for sup in 0..=full {
                if sup & m == m && !has(sup) {
                    return Err(Error::Internal(format!(
                        "filter not upward closed: {} in, {} out",
                        format_set(m, self.index_size),
                        format_set(sup, self.index_size)
                    )));
                }
            }
            for &m2 in &self.members {
                if !has(m & m2) {
                    return Err(Error::Internal(format!(
                        "filter not intersection closed at {} ∩ {}",
                        format_set(m, self.index_size),
                        format_set(m2, self.index_size)
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for FilterOnFiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .members
            .iter()
            .map(|&m| format_set(m, self.index_size))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Parses the CLI generator-list literal, e.g. `"{0,1};{1,2}"`.
pub fn parse_generator_list(text: &str, index_size: usize) -> Result<Vec<IndexSet>> {
    let mut gens = Vec::new();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(gens);
    }
    for part in trimmed.split(';') {
        let part = part.trim();
        let inner = part
            .strip_prefix('{')
            .and_then(|p| p.strip_suffix('}'))
            .ok_or_else(|| Error::Usage(format!("bad generator `{part}`: expected {{i,j,...}}")))?;
        let mut mask: IndexSet = 0;
        let inner = inner.trim();
        if !inner.is_empty() {
            for num in inner.split(',') {
                let i: usize = num
                    .trim()
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad index `{num}` in generator")))?;
                if i >= index_size {
                    return Err(Error::OutOfRange {
                        value: i,
                        universe: index_size,
                    });
                }
                mask |= 1 << i;
            }
        }
        gens.push(mask);
    }
    Ok(gens)
}
