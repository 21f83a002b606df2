//! Brute-force ground truth for small `n`.
//!
//! Everything here enumerates the symmetric group directly and evaluates the
//! definitions pair by pair, without the inversion-vector shortcuts used by
//! the rest of the crate, so it can serve as an independent check.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rankings::{Permutation, TopKRanking};

pub const MAX_ORACLE_N: usize = 8;

/// Largest `n` accepted by [`exhaustive_kemeny`].
pub const MAX_KEMENY_N: usize = 5;

fn check_size(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::range("n must be positive"));
    }
    if n > max {
        return Err(Error::TooLarge { n, max });
    }
    Ok(())
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// All preference orders of `0..n` in lexicographic order.
pub fn permutation_orders(n: usize) -> Result<Vec<Vec<usize>>> {
    check_size(n, MAX_ORACLE_N)?;
    let mut current: Vec<usize> = (0..n).collect();
    let mut all = vec![current.clone()];
    while next_permutation(&mut current) {
        all.push(current.clone());
    }
    Ok(all)
}

/// Every top-k list over `n` items, in lexicographic order.
pub fn enumerate_topk(n: usize, k: usize) -> Result<Vec<TopKRanking>> {
    check_size(n, MAX_ORACLE_N)?;
    if k == 0 || k > n {
        return Err(Error::range(format!("k = {k} not in 1..={n}")));
    }
    fn extend(
        n: usize,
        k: usize,
        used: &mut [bool],
        prefix: &mut Vec<usize>,
        out: &mut Vec<TopKRanking>,
    ) {
        if prefix.len() == k {
            out.push(TopKRanking::from_parts_unchecked(n, prefix.clone()));
            return;
        }
        for item in 0..n {
            if !used[item] {
                used[item] = true;
                prefix.push(item);
                extend(n, k, used, prefix, out);
                prefix.pop();
                used[item] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(
        n,
        k,
        &mut vec![false; n],
        &mut Vec::with_capacity(k),
        &mut out,
    );
    Ok(out)
}

/// Relative order of `a` and `b` in a top-k list: `Some(true)` when `a` is
/// ahead, `None` when neither is listed.
fn pair_order(rank: &[usize], k: usize, a: usize, b: usize) -> Option<bool> {
    if rank[a] == k && rank[b] == k {
        None
    } else {
        Some(rank[a] < rank[b])
    }
}

/// Top-k distance straight from the definition, `O(n^2)`.
pub fn brute_topk_distance(x: &TopKRanking, y: &TopKRanking) -> u64 {
    let (rx, ry) = (x.rank_lookup(), y.rank_lookup());
    let n = x.n();
    let mut d = 0;
    for a in 0..n {
        for b in a + 1..n {
            if let (Some(p), Some(q)) = (pair_order(&rx, x.k(), a, b), pair_order(&ry, y.k(), a, b))
            {
                if p != q {
                    d += 1;
                }
            }
        }
    }
    d
}

fn brute_order_distance(order: &[usize], sigma0: &Permutation) -> u64 {
    let mut d = 0;
    for p in 0..order.len() {
        for q in p + 1..order.len() {
            if sigma0.rank(order[p]) > sigma0.rank(order[q]) {
                d += 1;
            }
        }
    }
    d
}

/// Unnormalised weights `exp(-theta d(pi, sigma0))` of every full ranking,
/// in lexicographic order of preference lists, together with their total.
fn full_weights(sigma0: &Permutation, theta: f64) -> Result<(Vec<Vec<usize>>, Vec<f64>, f64)> {
    let orders = permutation_orders(sigma0.n())?;
    let mut z = CompensatedSum::default();
    let weights: Vec<f64> = orders
        .iter()
        .map(|o| {
            let d = brute_order_distance(o, sigma0);
            let w = if d == 0 {
                1.0
            } else {
                (-theta * d as f64).exp()
            };
            z.add(w);
            w
        })
        .collect();
    Ok((orders, weights, z.value()))
}

/// Probability of a top-k list as the sum over its linear extensions.
pub fn linear_extension_probability(
    sigma0: &Permutation,
    theta: f64,
    sigma: &TopKRanking,
) -> Result<f64> {
    let (orders, weights, z) = full_weights(sigma0, theta)?;
    let k = sigma.k();
    let mut total = CompensatedSum::default();
    for (o, w) in orders.iter().zip(&weights) {
        if &o[..k] == sigma.items() {
            total.add(*w);
        }
    }
    Ok(total.value() / z)
}

/// Exact `P(item i ahead of item j)` under `M(sigma0, theta)`.
pub fn exact_pairwise_marginal(
    sigma0: &Permutation,
    theta: f64,
    i: usize,
    j: usize,
) -> Result<f64> {
    let (orders, weights, z) = full_weights(sigma0, theta)?;
    let mut hit = CompensatedSum::default();
    for (o, w) in orders.iter().zip(&weights) {
        let pi = o.iter().position(|&x| x == i);
        let pj = o.iter().position(|&x| x == j);
        if pi < pj {
            hit.add(*w);
        }
    }
    Ok(hit.value() / z)
}

/// Full rankings extending `sigma`, each with its conditional probability
/// given that the top-k list equals `sigma`.
pub fn extension_conditionals(
    sigma0: &Permutation,
    theta: f64,
    sigma: &TopKRanking,
) -> Result<Vec<(Permutation, f64)>> {
    let (orders, weights, _) = full_weights(sigma0, theta)?;
    let k = sigma.k();
    let mut total = CompensatedSum::default();
    let mut chosen = Vec::new();
    for (o, w) in orders.iter().zip(&weights) {
        if &o[..k] == sigma.items() {
            total.add(*w);
            chosen.push((Permutation::from_order(o)?, *w));
        }
    }
    let total = total.value();
    Ok(chosen.into_iter().map(|(p, w)| (p, w / total)).collect())
}

/// `marginals[a][r] = P(item a has rank r)` under `M(e, theta)`.
pub fn position_marginals(n: usize, theta: f64) -> Result<Vec<Vec<f64>>> {
    let (orders, weights, z) = full_weights(&Permutation::identity(n), theta)?;
    let mut acc = vec![vec![CompensatedSum::default(); n]; n];
    for (o, w) in orders.iter().zip(&weights) {
        for (r, &item) in o.iter().enumerate() {
            acc[item][r].add(*w);
        }
    }
    Ok(acc
        .into_iter()
        .map(|row| row.into_iter().map(|s| s.value() / z).collect())
        .collect())
}

/// `P(rank(i) <= k) - P(rank(i+1) <= k)` under `M(e, theta)`, with items and
/// ranks 1-based, by enumeration of the symmetric group.
pub fn delta_ik_oracle(n: usize, k: usize, i: usize, theta: f64) -> Result<f64> {
    check_size(n, MAX_ORACLE_N)?;
    if i == 0 || i >= n {
        return Err(Error::range(format!("i = {i} not in 1..={}", n - 1)));
    }
    if k == 0 || k > n {
        return Err(Error::range(format!("k = {k} not in 1..={n}")));
    }
    Ok(delta_row(&position_marginals(n, theta)?, k)[i - 1])
}

/// All `Delta^{ik}` for `i = 1..n-1` from a table of position marginals.
pub fn delta_row(marginals: &[Vec<f64>], k: usize) -> Vec<f64> {
    let top = |a: usize| -> f64 {
        let mut s = CompensatedSum::default();
        for &p in &marginals[a][..k] {
            s.add(p);
        }
        s.value()
    };
    (0..marginals.len() - 1)
        .map(|a| top(a) - top(a + 1))
        .collect()
}

/// Exact law of top-k lists under `M(sigma0, theta)`, built by summing the
/// probabilities of full rankings over their prefixes.
#[derive(Debug, Clone)]
pub struct ExhaustiveTable {
    sigma0: Permutation,
    k: usize,
    theta: f64,
    objects: Vec<TopKRanking>,
    probabilities: Vec<f64>,
    index: HashMap<Vec<usize>, usize>,
}

impl ExhaustiveTable {
    pub fn new(sigma0: &Permutation, k: usize, theta: f64) -> Result<Self> {
        let n = sigma0.n();
        let objects = enumerate_topk(n, k)?;
        let index: HashMap<Vec<usize>, usize> = objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.items().to_vec(), i))
            .collect();
        let (orders, weights, z) = full_weights(sigma0, theta)?;
        let mut acc = vec![CompensatedSum::default(); objects.len()];
        for (o, w) in orders.iter().zip(&weights) {
            acc[index[&o[..k]]].add(*w);
        }
        Ok(ExhaustiveTable {
            sigma0: sigma0.clone(),
            k,
            theta,
            probabilities: acc.iter().map(|s| s.value() / z).collect(),
            objects,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.sigma0.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn objects(&self) -> &[TopKRanking] {
        &self.objects
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, sigma: &TopKRanking) -> Option<f64> {
        self.index
            .get(sigma.items())
            .map(|&i| self.probabilities[i])
    }

    pub fn total_probability(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for &p in &self.probabilities {
            s.add(p);
        }
        s.value()
    }

    fn distances_to(&self, reference: &TopKRanking) -> Vec<u64> {
        self.objects
            .iter()
            .map(|o| brute_topk_distance(o, reference))
            .collect()
    }

    fn moments(&self, reference: &TopKRanking) -> (f64, f64) {
        let d = self.distances_to(reference);
        let mut mean = CompensatedSum::default();
        for (p, &x) in self.probabilities.iter().zip(&d) {
            mean.add(p * x as f64);
        }
        let mean = mean.value();
        let mut var = CompensatedSum::default();
        for (p, &x) in self.probabilities.iter().zip(&d) {
            var.add(p * (x as f64 - mean).powi(2));
        }
        (mean, var.value())
    }

    /// `E[d(sigma, sigma0)]` against the full consensus.
    pub fn expected_distance(&self) -> f64 {
        self.moments(&self.sigma0.to_topk()).0
    }

    pub fn variance_distance(&self) -> f64 {
        self.moments(&self.sigma0.to_topk()).1
    }

    /// `E[d(sigma, sigma0|k)]` against the consensus truncated to its top-k list.
    pub fn expected_distance_to_prefix(&self) -> f64 {
        self.moments(&self.sigma0.prefix(self.k).expect("k validated"))
            .0
    }

    /// `P(a is determined ahead of b)` for every ordered pair.
    fn pair_table(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut acc = vec![vec![CompensatedSum::default(); n]; n];
        for (o, &p) in self.objects.iter().zip(&self.probabilities) {
            let rank = o.rank_lookup();
            for (a, row) in acc.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    if a != b && pair_order(&rank, self.k, a, b) == Some(true) {
                        cell.add(p);
                    }
                }
            }
        }
        acc.into_iter()
            .map(|row| row.into_iter().map(|s| s.value()).collect())
            .collect()
    }

    /// `E[d(sigma, tau)]` for independent draws from two tables on the same items.
    pub fn cross_expectation(&self, other: &ExhaustiveTable) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        let (x, y) = (self.pair_table(), other.pair_table());
        let mut s = CompensatedSum::default();
        for a in 0..self.n() {
            for b in 0..self.n() {
                if a != b {
                    s.add(x[a][b] * y[b][a]);
                }
            }
        }
        Ok(s.value())
    }

    /// Same quantity by a direct double sum over both tables; quadratic in
    /// the table size, used to cross-check [`Self::cross_expectation`].
    pub fn cross_expectation_direct(&self, other: &ExhaustiveTable) -> f64 {
        let mut s = CompensatedSum::default();
        for (x, &p) in self.objects.iter().zip(&self.probabilities) {
            for (y, &q) in other.objects.iter().zip(&other.probabilities) {
                s.add(p * q * brute_topk_distance(x, y) as f64);
            }
        }
        s.value()
    }
}

/// Expectations of the concentric mixture quantities for one reference
/// ranking convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentExpectations {
    /// `E[d(gamma, sigma0)]`
    pub gamma_center: f64,
    /// `E[d(beta, sigma0)]`
    pub beta_center: f64,
    /// `E[d(gamma, gamma')]`
    pub gamma_gamma: f64,
    /// `E[d(beta, beta')]`
    pub beta_beta: f64,
    /// `E[d(beta, gamma)]`
    pub beta_gamma: f64,
}

/// Exact expectations for expert (`theta_g`) and non-expert (`theta_b`) top-k
/// draws around the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactExpectations {
    /// Distances to the centre measured against the full consensus ranking.
    pub full: ComponentExpectations,
    /// Distances to the centre measured against its top-k list.
    pub prefix: ComponentExpectations,
}

pub fn exact_expectations(
    n: usize,
    k: usize,
    theta_g: f64,
    theta_b: f64,
) -> Result<ExactExpectations> {
    check_size(n, 7)?;
    let e = Permutation::identity(n);
    let g = ExhaustiveTable::new(&e, k, theta_g)?;
    let b = ExhaustiveTable::new(&e, k, theta_b)?;
    let gamma_gamma = g.cross_expectation(&g)?;
    let beta_beta = b.cross_expectation(&b)?;
    let beta_gamma = b.cross_expectation(&g)?;
    let build = |gamma_center, beta_center| ComponentExpectations {
        gamma_center,
        beta_center,
        gamma_gamma,
        beta_beta,
        beta_gamma,
    };
    Ok(ExactExpectations {
        full: build(g.expected_distance(), b.expected_distance()),
        prefix: build(
            g.expected_distance_to_prefix(),
            b.expected_distance_to_prefix(),
        ),
    })
}

/// Kemeny consensus of a sample by exhaustive search; ties go to the
/// lexicographically first preference list.
pub fn exhaustive_kemeny(sample: &[TopKRanking]) -> Result<Permutation> {
    let first = sample.first().ok_or(Error::EmptySample)?;
    let n = first.n();
    check_size(n, MAX_KEMENY_N)?;
    if let Some(bad) = sample.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.n(),
        });
    }
    let mut best: Option<(u64, Vec<usize>)> = None;
    for order in permutation_orders(n)? {
        let candidate = TopKRanking::from_parts_unchecked(n, order.clone());
        let cost: u64 = sample
            .iter()
            .map(|s| brute_topk_distance(&candidate, s))
            .sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, order));
        }
    }
    Permutation::from_order(&best.expect("n >= 1").1)
}
