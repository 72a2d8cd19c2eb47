use std::fmt;

use serde::{Deserialize, Serialize};

/// A set of edge ids (data qubits), stored as a packed bit vector.
#[derive(Clone, Default, Serialize, Deserialize)]
pub struct EdgeSet {
    words: Vec<u64>,
}

impl EdgeSet {
    fn trimmed(&self) -> &[u64] {
        let end = self.words.iter().rposition(|&w| w != 0).map_or(0, |i| i + 1);
        &self.words[..end]
    }
}

impl PartialEq for EdgeSet {
    fn eq(&self, other: &Self) -> bool {
        self.trimmed() == other.trimmed()
    }
}

impl Eq for EdgeSet {}

impl std::hash::Hash for EdgeSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.trimmed().hash(state);
    }
}

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n_edges: usize) -> Self {
        Self {
            words: vec![0; n_edges.div_ceil(64)],
        }
    }

    pub fn from_edges<I: IntoIterator<Item = usize>>(edges: I) -> Self {
        let mut set = Self::new();
        for e in edges {
            set.insert(e);
        }
        set
    }

    #[inline]
    fn grow(&mut self, word: usize) {
        if word >= self.words.len() {
            self.words.resize(word + 1, 0);
        }
    }

    #[inline]
    pub fn insert(&mut self, e: usize) {
        self.grow(e / 64);
        self.words[e / 64] |= 1 << (e % 64);
    }

    #[inline]
    pub fn remove(&mut self, e: usize) {
        if let Some(w) = self.words.get_mut(e / 64) {
            *w &= !(1 << (e % 64));
        }
    }

    #[inline]
    pub fn toggle(&mut self, e: usize) {
        self.grow(e / 64);
        self.words[e / 64] ^= 1 << (e % 64);
    }

    #[inline]
    pub fn contains(&self, e: usize) -> bool {
        self.words.get(e / 64).is_some_and(|w| w & (1 << (e % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Zeroes the set while keeping its allocation.
    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i * 64 + tz)
            })
        })
    }

    pub fn symmetric_difference(&self, other: &EdgeSet) -> EdgeSet {
        let mut out = self.clone();
        out.xor_with(other);
        out
    }

    pub fn xor_with(&mut self, other: &EdgeSet) {
        self.grow(other.words.len().saturating_sub(1));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        self.grow(other.words.len().saturating_sub(1));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Size of the intersection with `other`.
    pub fn intersection_len(&self, other: &EdgeSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.words.iter().enumerate().all(|(i, &w)| {
            let o = other.words.get(i).copied().unwrap_or(0);
            w & !o == 0
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self, n_edges: usize) -> &mut [u64] {
        self.grow(n_edges.div_ceil(64).saturating_sub(1));
        &mut self.words
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_edges(iter)
    }
}
