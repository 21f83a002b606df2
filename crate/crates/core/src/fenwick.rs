//! Binary indexed tree over `0..n` used as an order-statistics structure.
//!
//! Every slot holds a small count (0 or 1 in all uses here). `select(r)`
//! returns the `r`-th occupied slot in increasing order, which is what the
//! inversion-vector decoding needs.

#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<i64>,
    log: usize,
}

impl Fenwick {
    /// Empty tree over `0..n`.
    pub(crate) fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
            log: usize::BITS as usize - n.leading_zeros() as usize,
        }
    }

    /// Tree over `0..n` with every slot set to one. O(n).
    pub(crate) fn full(n: usize) -> Self {
        let mut tree = vec![0i64; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Fenwick {
            tree,
            log: usize::BITS as usize - n.leading_zeros() as usize,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub(crate) fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over slots `0..end`.
    pub(crate) fn prefix_sum(&self, end: usize) -> i64 {
        let mut i = end.min(self.len());
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    /// Smallest slot `s` such that `prefix_sum(s + 1) > rank`.
    ///
    /// Requires `rank < prefix_sum(len)`.
    pub(crate) fn select(&self, rank: usize) -> usize {
        let mut pos = 0usize;
        let mut remaining = rank as i64;
        let mut step = 1usize << self.log;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Number of strict inversions `i < j, values[i] > values[j]`, with values in `0..bound`.
pub(crate) fn count_inversions(values: &[usize], bound: usize) -> u64 {
    let mut seen = Fenwick::new(bound);
    let mut total = 0u64;
    for (processed, &v) in values.iter().enumerate() {
        let not_greater = seen.prefix_sum(v + 1) as u64;
        total += processed as u64 - not_greater;
        seen.add(v, 1);
    }
    total
}
