//! Permutations, top-k lists and Kendall's-tau distances.
//!
//! Items and ranks are 0-based throughout the library. A [`Permutation`]
//! stores the rank of every item (`ranks[i]` is the rank of item `i`, rank 0
//! being the most preferred). A [`TopKRanking`] stores the `k` most preferred
//! items in preference order; items not listed are known only to be ranked
//! after all listed ones.
//!
//! Both representations share the same inversion-vector code: for a partial
//! array `a` of distinct values in `0..n`,
//!
//! ```text
//! v[j] = #{ x < a[j] : x not in a[0..j] }
//! ```
//!
//! For a rank vector this is `#{ i > j : ranks[i] < ranks[j] }` and the
//! entries sum to the Kendall distance to the identity. For a top-k list the
//! first `k` entries are fully determined by the list even though the rest of
//! the ranking is not, and they sum to the top-k distance to the identity.

use crate::error::{Error, Result};
use crate::fenwick::{count_inversions, Fenwick};

/// A full ranking of `n` items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    ranks: Vec<usize>,
}

/// The `k` most preferred items of `n`, in preference order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopKRanking {
    n: usize,
    items: Vec<usize>,
}

/// Inversion vector of a full or partial ranking: `k` defined entries with
/// `entries[j] <= n - j - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InversionVector {
    n: usize,
    entries: Vec<usize>,
}

fn check_distinct(values: &[usize], n: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in values {
        if v >= n {
            return Err(Error::range(format!("{what} {v} not in 0..{n}")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::invalid(format!("{what} {v} appears twice")));
        }
    }
    Ok(())
}

/// Inversion-vector code of a partial array of distinct values in `0..n`.
fn encode(values: &[usize], n: usize) -> Vec<usize> {
    let mut placed = Fenwick::new(n);
    values
        .iter()
        .map(|&v| {
            let smaller_placed = placed.prefix_sum(v) as usize;
            placed.add(v, 1);
            v - smaller_placed
        })
        .collect()
}

/// Inverse of [`encode`]: `a[j]` is the `v[j]`-th smallest value not yet used.
fn decode(entries: &[usize], n: usize) -> Vec<usize> {
    let mut free = Fenwick::full(n);
    entries
        .iter()
        .map(|&v| {
            let value = free.select(v);
            free.add(value, -1);
            value
        })
        .collect()
}

/// Quadratic decoder kept as an independent cross-check of [`decode`].
pub fn decode_naive(v: &InversionVector) -> Vec<usize> {
    let mut free: Vec<usize> = (0..v.n).collect();
    v.entries.iter().map(|&e| free.remove(e)).collect()
}

impl Permutation {
    /// Builds a permutation from its rank vector.
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::invalid("a ranking needs at least one item"));
        }
        check_distinct(&ranks, ranks.len(), "rank")?;
        Ok(Permutation { ranks })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            ranks: (0..n).collect(),
        }
    }

    /// The ranking that places items in the order `n-1, ..., 1, 0`.
    pub fn reversed(n: usize) -> Self {
        Permutation {
            ranks: (0..n).rev().collect(),
        }
    }

    /// Builds a permutation from a preference list (most preferred item first).
    pub fn from_order(order: &[usize]) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::invalid("a ranking needs at least one item"));
        }
        check_distinct(order, order.len(), "item")?;
        let mut ranks = vec![0; order.len()];
        for (r, &item) in order.iter().enumerate() {
            ranks[item] = r;
        }
        Ok(Permutation { ranks })
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, item: usize) -> usize {
        self.ranks[item]
    }

    /// Items sorted by rank, most preferred first.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.n()];
        for (item, &r) in self.ranks.iter().enumerate() {
            order[r] = item;
        }
        order
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            ranks: self.order(),
        }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        same_n(self.n(), other.n())?;
        Ok(Permutation {
            ranks: other.ranks.iter().map(|&i| self.ranks[i]).collect(),
        })
    }

    /// The `n - 1` entries `V_j = #{ i > j : ranks[i] < ranks[j] }`.
    pub fn inversion_vector(&self) -> InversionVector {
        let n = self.n();
        let mut entries = encode(&self.ranks, n);
        entries.truncate(n - 1);
        InversionVector { n, entries }
    }

    /// Rebuilds the permutation from an inversion vector with `n - 1` or `n` entries.
    pub fn from_inversion_vector(v: &InversionVector) -> Result<Permutation> {
        if v.entries.len() + 1 < v.n {
            return Err(Error::invalid(format!(
                "a full permutation of {} items needs at least {} entries, got {}",
                v.n,
                v.n - 1,
                v.entries.len()
            )));
        }
        let mut entries = v.entries.clone();
        entries.resize(v.n, 0);
        Ok(Permutation {
            ranks: decode(&entries, v.n),
        })
    }

    /// The same ranking seen as a top-n list.
    pub fn to_topk(&self) -> TopKRanking {
        TopKRanking {
            n: self.n(),
            items: self.order(),
        }
    }

    /// The `k` most preferred items of this ranking.
    pub fn prefix(&self, k: usize) -> Result<TopKRanking> {
        let mut items = self.order();
        if k == 0 || k > items.len() {
            return Err(Error::range(format!("k = {k} not in 1..={}", items.len())));
        }
        items.truncate(k);
        Ok(TopKRanking { n: self.n(), items })
    }
}

impl TopKRanking {
    pub fn new(n: usize, items: Vec<usize>) -> Result<Self> {
        if items.is_empty() || items.len() > n {
            return Err(Error::range(format!(
                "list length {} not in 1..={n}",
                items.len()
            )));
        }
        check_distinct(&items, n, "item")?;
        Ok(TopKRanking { n, items })
    }

    pub(crate) fn from_parts_unchecked(n: usize, items: Vec<usize>) -> Self {
        debug_assert!(TopKRanking::new(n, items.clone()).is_ok());
        TopKRanking { n, items }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn is_full(&self) -> bool {
        self.items.len() + 1 >= self.n
    }

    /// Position of `item` in the list, if listed.
    pub fn position(&self, item: usize) -> Option<usize> {
        self.items.iter().position(|&x| x == item)
    }

    /// Rank lookup of length `n` where unlisted items map to `k`.
    pub fn rank_lookup(&self) -> Vec<usize> {
        let mut pos = vec![self.k(); self.n];
        for (r, &item) in self.items.iter().enumerate() {
            pos[item] = r;
        }
        pos
    }

    /// The `k` determined entries of the inversion vector.
    pub fn inversion_vector(&self) -> InversionVector {
        InversionVector {
            n: self.n,
            entries: encode(&self.items, self.n),
        }
    }

    pub fn from_inversion_vector(v: &InversionVector) -> Result<TopKRanking> {
        if v.entries.is_empty() {
            return Err(Error::invalid("a top-k list needs k >= 1"));
        }
        Ok(TopKRanking {
            n: v.n,
            items: decode(&v.entries, v.n),
        })
    }

    /// The full permutation when the list determines it (`k >= n - 1`).
    pub fn to_permutation(&self) -> Option<Permutation> {
        if !self.is_full() {
            return None;
        }
        let mut order = self.items.clone();
        if order.len() + 1 == self.n {
            let missing = self.rank_lookup().iter().position(|&p| p == self.k());
            order.push(missing.expect("exactly one item is unlisted"));
        }
        Some(Permutation::from_order(&order).expect("list is a valid order"))
    }
}

impl InversionVector {
    pub fn new(n: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() > n {
            return Err(Error::invalid(format!(
                "{} entries for n = {n}",
                entries.len()
            )));
        }
        for (j, &e) in entries.iter().enumerate() {
            if e + j >= n {
                return Err(Error::range(format!(
                    "entry {j} is {e}, must be at most {}",
                    n - j - 1
                )));
            }
        }
        Ok(InversionVector { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&e| e as u64).sum()
    }
}

fn same_n(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Number of item pairs ordered differently by the two permutations. O(n log n).
pub fn kendall_full(sigma: &Permutation, pi: &Permutation) -> Result<u64> {
    same_n(sigma.n(), pi.n())?;
    let seq: Vec<usize> = sigma.order().into_iter().map(|i| pi.rank(i)).collect();
    Ok(count_inversions(&seq, pi.n()))
}

/// Kendall distance between top-k lists where a pair only counts when its
/// order is determined in both lists (at least one of the two items listed)
/// and the two orders disagree.
pub fn kendall_topk(sigma: &TopKRanking, pi: &TopKRanking) -> Result<u64> {
    same_n(sigma.n, pi.n)?;
    Ok(topk_pair_distance(
        sigma,
        &sigma.rank_lookup(),
        pi,
        &pi.rank_lookup(),
    ))
}

/// Top-k distance with precomputed rank lookups (see [`TopKRanking::rank_lookup`]).
///
/// Items outside both lists never contribute, so only the union of the two
/// lists is scanned: items of `a` in `a`-order, then the remaining items of
/// `b` in `b`-order. That is already sorted by `(rank_a, rank_b)`, so the
/// discordant pairs are the strict inversions of the `rank_b` sequence.
pub(crate) fn topk_pair_distance(
    a: &TopKRanking,
    a_pos: &[usize],
    b: &TopKRanking,
    b_pos: &[usize],
) -> u64 {
    let ka = a.k();
    let mut seq = Vec::with_capacity(a.k() + b.k());
    seq.extend(a.items.iter().map(|&x| b_pos[x]));
    seq.extend(
        b.items
            .iter()
            .filter(|&&x| a_pos[x] == ka)
            .map(|&x| b_pos[x]),
    );
    count_inversions(&seq, b.k() + 1)
}

/// Distance between a top-k list and a full ranking, i.e. the sum of the
/// inversion-vector entries of the list relabelled by `sigma0`. O(k log n).
pub fn distance_to_full(sigma: &TopKRanking, sigma0: &Permutation) -> Result<u64> {
    same_n(sigma0.n(), sigma.n)?;
    Ok(distance_to_full_items(&sigma.items, sigma0))
}

pub(crate) fn distance_to_full_items(items: &[usize], sigma0: &Permutation) -> u64 {
    let relabelled: Vec<usize> = items.iter().map(|&x| sigma0.rank(x)).collect();
    encode(&relabelled, sigma0.n())
        .into_iter()
        .map(|v| v as u64)
        .sum()
}

/// Inverse of a top-k object seen as a partial mapping.
///
/// The list `items` maps position `r` to `items[r]`. When those values are
/// exactly `0..k` the inverse mapping is again a list of length `k`; it has
/// the same distance to the identity and, under a Mallows model centred at
/// the identity, the same probability.
pub fn invert_topk(sigma: &TopKRanking) -> Result<TopKRanking> {
    let k = sigma.k();
    let mut inverse = vec![usize::MAX; k];
    for (r, &value) in sigma.items.iter().enumerate() {
        if value >= k {
            return Err(Error::invalid(format!(
                "value {value} is outside 0..{k}; the known ranks must be a prefix"
            )));
        }
        inverse[value] = r;
    }
    Ok(TopKRanking {
        n: sigma.n,
        items: inverse,
    })
}
