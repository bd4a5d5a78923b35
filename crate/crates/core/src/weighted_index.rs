//! Dynamic weighted sampling over node indices.
//!
//! A Fenwick tree over `f64` weights: point updates and proportional draws are
//! both `O(log n)`. Capacity doubles as indices are added. Running sums drift
//! after many updates, so [`WeightedIndex::rebuild`] recomputes them from the
//! stored leaf weights.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct WeightedIndex {
    weights: Vec<f64>,
    // tree[i] (1-based) covers weights (i - lowbit(i), i]
    tree: Vec<f64>,
    updates_since_rebuild: u64,
}

impl WeightedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let cap = capacity.max(1).next_power_of_two();
        WeightedIndex {
            weights: Vec::with_capacity(cap),
            tree: vec![0.0; cap + 1],
            updates_since_rebuild: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn capacity(&self) -> usize {
        self.tree.len().saturating_sub(1)
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights.get(index).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.prefix_sum(self.len())
    }

    /// Updates since the last full recomputation of the partial sums.
    pub fn updates_since_rebuild(&self) -> u64 {
        self.updates_since_rebuild
    }

    /// Sum of the weights at indices `0..end`.
    pub fn prefix_sum(&self, end: usize) -> f64 {
        let mut i = end.min(self.len());
        let mut acc = 0.0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    fn grow_to(&mut self, len: usize) {
        if len <= self.capacity() {
            return;
        }
        let cap = len.next_power_of_two().max(2 * self.capacity()).max(1);
        self.tree = vec![0.0; cap + 1];
        self.recompute();
    }

    /// Sets the weight at `index`, extending the index space with zero weights
    /// if needed.
    pub fn set_weight(&mut self, index: usize, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidWeight(weight));
        }
        if index >= self.len() {
            self.grow_to(index + 1);
            self.weights.resize(index + 1, 0.0);
        }
        let delta = weight - self.weights[index];
        self.weights[index] = weight;
        let cap = self.capacity();
        let mut i = index + 1;
        while i <= cap {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
        self.updates_since_rebuild += 1;
        Ok(())
    }

    /// Appends a new index with the given weight and returns it.
    pub fn push(&mut self, weight: f64) -> Result<usize> {
        let index = self.len();
        self.set_weight(index, weight)?;
        Ok(index)
    }

    fn recompute(&mut self) {
        let cap = self.capacity();
        self.tree.iter_mut().for_each(|t| *t = 0.0);
        for (i, w) in self.weights.iter().enumerate() {
            self.tree[i + 1] = *w;
        }
        for i in 1..=cap {
            let parent = i + (i & i.wrapping_neg());
            if parent <= cap {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    /// Recomputes every partial sum from the leaf weights in `O(n)`.
    pub fn rebuild(&mut self) {
        self.recompute();
        self.updates_since_rebuild = 0;
    }

    /// Draws an index with probability proportional to its weight. Indices
    /// with weight zero are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::EmptyStructure);
        }
        let u = rng.random::<f64>() * total;
        Ok(self.find(u))
    }

    /// The first index whose cumulative weight exceeds `u`.
    fn find(&self, u: f64) -> usize {
        let cap = self.capacity();
        let mut pos = 0usize;
        let mut rem = u;
        let mut step = cap.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= cap && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        // pos is now the number of leading weights whose sum is <= u
        let n = self.len();
        let mut idx = pos.min(n.saturating_sub(1));
        if self.weights[idx] > 0.0 {
            return idx;
        }
        // Rounding can land on a zero-weight slot: move to the nearest positive one.
        while idx + 1 < n && self.weights[idx] == 0.0 {
            idx += 1;
        }
        while idx > 0 && self.weights[idx] == 0.0 {
            idx -= 1;
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicate::replicate_rng;

    #[test]
    fn prefix_sums_match_naive() {
        let mut w = WeightedIndex::new();
        let vals = [3.0, 0.0, 1.5, 2.0, 0.25, 7.0];
        for v in vals {
            w.push(v).unwrap();
        }
        w.set_weight(2, 4.0).unwrap();
        let mut naive = vals.to_vec();
        naive[2] = 4.0;
        for end in 0..=naive.len() {
            let expect: f64 = naive[..end].iter().sum();
            assert!((w.prefix_sum(end) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_weights_and_empty_draws() {
        let mut w = WeightedIndex::new();
        assert_eq!(w.set_weight(0, -1.0), Err(Error::InvalidWeight(-1.0)));
        assert!(w.set_weight(0, f64::NAN).is_err());
        let mut rng = replicate_rng(0, 0);
        assert_eq!(w.sample(&mut rng), Err(Error::EmptyStructure));
        w.push(0.0).unwrap();
        assert_eq!(w.sample(&mut rng), Err(Error::EmptyStructure));
    }

    #[test]
    fn zero_weight_never_drawn() {
        let mut w = WeightedIndex::new();
        for v in [0.0, 1.0, 0.0, 0.0, 2.0, 0.0] {
            w.push(v).unwrap();
        }
        let mut rng = replicate_rng(5, 0);
        for _ in 0..20_000 {
            let i = w.sample(&mut rng).unwrap();
            assert!(i == 1 || i == 4);
        }
        assert_eq!(w.find(0.0), 1);
        assert_eq!(w.find(1.0), 4);
        assert_eq!(w.find(3.0), 4);
    }

    #[test]
    fn grows_past_initial_capacity() {
        let mut w = WeightedIndex::with_capacity(2);
        for i in 0..100 {
            w.push(i as f64).unwrap();
        }
        w.set_weight(300, 1.0).unwrap();
        assert_eq!(w.len(), 301);
        assert!((w.total() - (4950.0 + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn rebuild_removes_drift() {
        let mut w = WeightedIndex::new();
        w.push(1e16).unwrap();
        w.push(1.0).unwrap();
        w.set_weight(0, 0.0).unwrap();
        w.rebuild();
        assert_eq!(w.total(), 1.0);
        assert_eq!(w.updates_since_rebuild(), 0);
    }
}
