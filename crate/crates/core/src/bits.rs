//! Dense vertex sets over a fixed universe `{0, .., n-1}`.

use rand::Rng;

const BITS: usize = 64;

/// A subset of vertices as a packed bit vector with a cached cardinality.
///
/// The cached count is kept in sync by `insert`/`remove`; [`VertexSet::recount`]
/// recomputes it from the raw words for audits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    words: Vec<u64>,
    universe: usize,
    card: usize,
}

impl VertexSet {
    pub fn empty(universe: usize) -> Self {
        Self {
            words: vec![0; universe.div_ceil(BITS)],
            universe,
            card: 0,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self {
            words: vec![!0u64; universe.div_ceil(BITS)],
            universe,
            card: universe,
        };
        s.clear_tail();
        s
    }

    pub fn from_indices(universe: usize, indices: &[usize]) -> Self {
        let mut s = Self::empty(universe);
        for &v in indices {
            s.insert(v);
        }
        s
    }

    /// Each vertex included independently with probability 1/2.
    pub fn random(universe: usize, rng: &mut impl Rng) -> Self {
        let mut s = Self::empty(universe);
        for v in 0..universe {
            if rng.gen::<bool>() {
                s.insert(v);
            }
        }
        s
    }

    /// Size of the universe (not of the subset).
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn cardinality(&self) -> usize {
        self.card
    }

    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    pub fn is_full(&self) -> bool {
        self.card == self.universe
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        debug_assert!(v < self.universe);
        self.words[v / BITS] >> (v % BITS) & 1 == 1
    }

    /// Returns true if the vertex was newly inserted.
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.universe);
        let w = &mut self.words[v / BITS];
        let mask = 1u64 << (v % BITS);
        if *w & mask == 0 {
            *w |= mask;
            self.card += 1;
            true
        } else {
            false
        }
    }

    /// Returns true if the vertex was present.
    pub fn remove(&mut self, v: usize) -> bool {
        assert!(v < self.universe);
        let w = &mut self.words[v / BITS];
        let mask = 1u64 << (v % BITS);
        if *w & mask != 0 {
            *w &= !mask;
            self.card -= 1;
            true
        } else {
            false
        }
    }

    pub fn set(&mut self, v: usize, member: bool) {
        if member {
            self.insert(v);
        } else {
            self.remove(v);
        }
    }

    pub fn complement(&self) -> Self {
        let mut s = Self {
            words: self.words.iter().map(|w| !w).collect(),
            universe: self.universe,
            card: self.universe - self.card,
        };
        s.clear_tail();
        s
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(i * BITS + b)
                }
            })
        })
    }

    /// Population count straight from the words, ignoring the cache.
    pub fn recount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn clear_tail(&mut self) {
        let tail = self.universe % BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn cardinality_matches_popcount() {
        let mut rng = rng_from(1);
        for universe in [1usize, 63, 64, 65, 200] {
            let mut s = VertexSet::random(universe, &mut rng);
            assert_eq!(s.cardinality(), s.recount());
            for v in 0..universe {
                s.set(v, v % 3 == 0);
            }
            assert_eq!(s.cardinality(), s.recount());
            let c = s.complement();
            assert_eq!(c.cardinality(), universe - s.cardinality());
            assert_eq!(c.recount(), c.cardinality());
        }
    }

    #[test]
    fn iter_ascending_and_consistent() {
        let s = VertexSet::from_indices(130, &[0, 1, 63, 64, 127, 129]);
        let got: Vec<usize> = s.iter().collect();
        assert_eq!(got, vec![0, 1, 63, 64, 127, 129]);
        assert!(got.iter().all(|&v| s.contains(v)));
        assert_eq!(s.cardinality(), 6);
    }

    #[test]
    fn full_set_has_clean_tail() {
        let s = VertexSet::full(70);
        assert_eq!(s.recount(), 70);
        assert!(s.is_full());
        assert!(s.complement().is_empty());
    }
}
