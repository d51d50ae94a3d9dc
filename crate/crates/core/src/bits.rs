//! Fixed-width bit sets over small integer universes.
//!
//! Used for ng-memories, cut-defining customer sets and per-cut visited
//! flags. Subset and disjointness tests sit in the dominance inner loop of
//! the labeling algorithm, so everything here is branch-light word
//! arithmetic. Sets that are compared with each other must be created with
//! the same capacity.

use std::fmt;

use smallvec::SmallVec;

/// A set of integers in `0..capacity`, stored as inline 64-bit words for
/// universes up to 128 elements (the common case here) and spilling to the
/// heap beyond that.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    words: SmallVec<[u64; 2]>,
}

impl BitSet {
    /// Empty set able to hold values in `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        let n_words = capacity.div_ceil(64).max(1);
        BitSet {
            words: smallvec::smallvec![0; n_words],
        }
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i / 64 < self.words.len(), "bit {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        debug_assert!(i / 64 < self.words.len(), "bit {i} out of range");
        self.words[i / 64] &= !(1 << (i % 64));
    }

    /// Membership test; indices at or beyond the capacity report `false`.
    pub fn contains(&self, i: usize) -> bool {
        match self.words.get(i / 64) {
            Some(w) => w & (1 << (i % 64)) != 0,
            None => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    /// `self ⊆ other`. Both sets must share a capacity.
    pub fn is_subset_of(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.words.len(), other.words.len());
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// `self ∩ other = ∅`. Both sets must share a capacity.
    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.words.len(), other.words.len());
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.words.len(), other.words.len());
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.words.len(), other.words.len());
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Ascending iterator over the members.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let bit = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for BitSet {
    /// Collects into a set sized just large enough for the largest element;
    /// mainly a convenience for tests, where capacities are re-aligned by
    /// the caller anyway.
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let items: Vec<usize> = iter.into_iter().collect();
        let cap = items.iter().max().map_or(0, |&m| m + 1);
        let mut set = BitSet::new(cap);
        for i in items {
            set.insert(i);
        }
        set
    }
}

/// Builds a set with the given capacity from a slice of members.
pub fn bitset_of(capacity: usize, members: &[usize]) -> BitSet {
    let mut set = BitSet::new(capacity);
    for &m in members {
        set.insert(m);
    }
    set
}
