//! Consensus estimation, dispersion fitting and Borda sample complexity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::{self, Component, SplitMethod};
use crate::model::{
    bisect_decreasing, expected_distance, uniform_expected_distance, MallowsModel, THETA_CAP,
};
use crate::rankings::{distance_to_full_items, Permutation, TopKRanking};
use crate::rng::RandomSource;

fn common_n(sample: &[TopKRanking]) -> Result<usize> {
    let n = sample.first().ok_or(Error::EmptySample)?.n();
    if let Some(bad) = sample.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.n(),
        });
    }
    Ok(n)
}

/// Borda scores doubled so they stay integral: a listed item at position `r`
/// scores `2r`, an unlisted item scores `k + n - 1`, twice the mean of the
/// positions it could occupy.
pub fn borda_scores(sample: &[TopKRanking]) -> Result<Vec<u64>> {
    let n = common_n(sample)?;
    let mut scores = vec![0u64; n];
    for s in sample {
        let unlisted = (s.k() + n - 1) as u64;
        let rank = s.rank_lookup();
        for (item, score) in scores.iter_mut().enumerate() {
            *score += if rank[item] < s.k() {
                2 * rank[item] as u64
            } else {
                unlisted
            };
        }
    }
    Ok(scores)
}

/// Number of voters that listed each item.
pub fn source_counts(sample: &[TopKRanking]) -> Result<Vec<usize>> {
    let n = common_n(sample)?;
    let mut counts = vec![0; n];
    for s in sample {
        for &item in s.items() {
            counts[item] += 1;
        }
    }
    Ok(counts)
}

fn order_by_score(items: impl Iterator<Item = usize>, scores: &[u64]) -> Vec<usize> {
    let mut v: Vec<usize> = items.collect();
    v.sort_by_key(|&i| (scores[i], i));
    v
}

/// Borda consensus: items by ascending total rank, ties by ascending id.
pub fn borda(sample: &[TopKRanking]) -> Result<Permutation> {
    let scores = borda_scores(sample)?;
    Permutation::from_order(&order_by_score(0..scores.len(), &scores))
}

/// A consensus estimate whose first `k'` positions are known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEstimate {
    pub n: usize,
    /// Known prefix of the consensus, most preferred first. May be empty.
    pub order: Vec<usize>,
    /// Per item, number of voters in the whole sample that listed it.
    pub source_counts: Vec<usize>,
    /// Length of the part of `order` filled from expert rankings only.
    pub expert_prefix: usize,
    /// Sample indices treated as experts (empty for plain Borda).
    pub experts: Vec<usize>,
    /// Set when expert detection was degenerate and plain Borda was used.
    pub fallback: bool,
}

impl ConsensusEstimate {
    pub fn k_prime(&self) -> usize {
        self.order.len()
    }

    pub fn to_topk(&self) -> Option<TopKRanking> {
        TopKRanking::new(self.n, self.order.clone()).ok()
    }
}

/// Borda restricted to items listed by at least one voter; items nobody
/// ranked are left unknown.
pub fn borda_estimate(sample: &[TopKRanking]) -> Result<ConsensusEstimate> {
    let scores = borda_scores(sample)?;
    let counts = source_counts(sample)?;
    let order = order_by_score((0..scores.len()).filter(|&i| counts[i] > 0), &scores);
    Ok(ConsensusEstimate {
        n: scores.len(),
        order,
        source_counts: counts,
        expert_prefix: 0,
        experts: Vec::new(),
        fallback: false,
    })
}

/// Expert Borda: the prefix holds the items listed by detected experts in
/// expert-Borda order, followed by the remaining listed items in whole-sample
/// Borda order.
///
/// Experts are detected with the widest-gap split. Experts are usually a small
/// minority here, and 2-means then prefers to cut the large non-expert
/// cluster in two.
pub fn eborda(sample: &[TopKRanking]) -> Result<ConsensusEstimate> {
    eborda_with(sample, SplitMethod::Gap)
}

pub fn eborda_with(sample: &[TopKRanking], method: SplitMethod) -> Result<ConsensusEstimate> {
    common_n(sample)?;
    if sample.len() < 2 {
        let mut est = borda_estimate(sample)?;
        est.fallback = true;
        return Ok(est);
    }
    let separation = mixture::separate(sample, method)?;
    if separation.degenerate {
        let mut est = borda_estimate(sample)?;
        est.fallback = true;
        return Ok(est);
    }
    let experts: Vec<usize> = separation
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == Component::Expert)
        .map(|(i, _)| i)
        .collect();
    let expert_sample: Vec<TopKRanking> = experts.iter().map(|&i| sample[i].clone()).collect();
    let expert_scores = borda_scores(&expert_sample)?;
    let expert_counts = source_counts(&expert_sample)?;
    let all_scores = borda_scores(sample)?;
    let counts = source_counts(sample)?;

    let n = all_scores.len();
    let mut order = order_by_score((0..n).filter(|&i| expert_counts[i] > 0), &expert_scores);
    let expert_prefix = order.len();
    order.extend(order_by_score(
        (0..n).filter(|&i| expert_counts[i] == 0 && counts[i] > 0),
        &all_scores,
    ));
    Ok(ConsensusEstimate {
        n,
        order,
        source_counts: counts,
        expert_prefix,
        experts,
        fallback: false,
    })
}

/// Range of distances between the linear extensions of a partial estimate
/// and the true consensus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialError {
    pub d_min: u64,
    pub d_max: u64,
}

impl PartialError {
    pub fn mid(&self) -> f64 {
        (self.d_min + self.d_max) as f64 / 2.0
    }
}

pub fn partial_estimate_error(
    estimate: &ConsensusEstimate,
    sigma0: &Permutation,
) -> Result<PartialError> {
    let n = sigma0.n();
    if estimate.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: estimate.n,
        });
    }
    let d_min = distance_to_full_items(&estimate.order, sigma0);
    let unknown = (n - estimate.k_prime()) as u64;
    Ok(PartialError {
        d_min,
        d_max: d_min + unknown * unknown.saturating_sub(1) / 2,
    })
}

/// Why a dispersion estimate sits on the boundary of its range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaClamp {
    /// Every ranking agrees with the consensus; the estimate is the cap.
    Cap,
    /// Mean distance at or beyond the uniform level; the estimate is 0.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEstimate {
    pub theta: f64,
    pub mean_distance: f64,
    pub clamp: Option<ThetaClamp>,
}

/// Maximum-likelihood dispersion for a known consensus.
///
/// The distance is the sufficient statistic, so the likelihood equation is
/// `sum_i E_{k_i}[D](theta) = sum_i d(sigma_i, sigma0)`; rankings may have
/// different lengths.
pub fn estimate_theta_mle(sample: &[TopKRanking], sigma0: &Permutation) -> Result<ThetaEstimate> {
    let n = common_n(sample)?;
    if n != sigma0.n() {
        return Err(Error::DimensionMismatch {
            expected: sigma0.n(),
            got: n,
        });
    }
    let mut k_counts = vec![0usize; n + 1];
    let mut total: u64 = 0;
    for s in sample {
        k_counts[s.k()] += 1;
        total += distance_to_full_items(s.items(), sigma0);
    }
    let m = sample.len() as f64;
    let mean_distance = total as f64 / m;
    let groups: Vec<(usize, f64)> = k_counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k, c as f64))
        .collect();
    let uniform: f64 = groups
        .iter()
        .map(|&(k, c)| c * uniform_expected_distance(n, k))
        .sum();
    let (theta, clamp) = if total == 0 {
        (THETA_CAP, Some(ThetaClamp::Cap))
    } else if total as f64 >= uniform {
        (0.0, Some(ThetaClamp::Uniform))
    } else {
        let f = |t: f64| -> f64 {
            groups
                .iter()
                .map(|&(k, c)| c * expected_distance(n, k, t).expect("validated"))
                .sum()
        };
        (bisect_decreasing(f, total as f64), None)
    };
    Ok(ThetaEstimate {
        theta,
        mean_distance,
        clamp,
    })
}

/// `P(V <= x)` for the truncated geometric law on `0..m`.
fn geometric_cdf(theta: f64, m: usize, x: isize) -> f64 {
    if x < 0 {
        return 0.0;
    }
    let x = x as usize;
    if x + 1 >= m {
        return 1.0;
    }
    if theta == 0.0 {
        return (x + 1) as f64 / m as f64;
    }
    (-theta * (x + 1) as f64).exp_m1() / (-theta * m as f64).exp_m1()
}

/// `Delta^{1k}`: how much more likely the top consensus item is than the
/// second to appear among the first `k` positions.
///
/// With the consensus at the identity, the rank of item 1 is `V_1` and item 2
/// lands in the top k either behind item 1 (`V_1 <= V_2 <= k-2`) or ahead of
/// it. Summing the double sum over one index at a time leaves products of
/// truncated geometric CDFs.
pub fn delta_1k(n: usize, k: usize, theta: f64) -> Result<f64> {
    if n < 2 || k == 0 || k > n {
        return Err(Error::range(format!(
            "need n >= 2 and 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    if !(theta >= 0.0) || theta.is_infinite() {
        return Err(Error::range(format!(
            "theta = {theta} must be finite and >= 0"
        )));
    }
    let k = k as isize;
    let first = geometric_cdf(theta, n, k - 1);
    let second_behind = geometric_cdf(theta, n - 1, k - 2);
    let second_ahead = geometric_cdf(theta, n - 1, k - 1);
    Ok(first - first * second_behind - (1.0 - first) * second_ahead)
}

/// Intermediate quantities of the Borda sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BordaBound {
    pub delta_1k: f64,
    /// `k^2 (1 - e^{-theta})^2 / (1 - e^{-theta n})`
    pub base: f64,
    /// `base - i Delta^{1k}`
    pub denominator: f64,
    pub m: u64,
}

/// Number of top-k rankings after which Borda orders items `i` and `i + 1`
/// (1-based) correctly with probability at least `1 - epsilon`.
pub fn borda_sample_complexity(
    n: usize,
    k: usize,
    theta: f64,
    i: usize,
    epsilon: f64,
) -> Result<BordaBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::range(format!("epsilon = {epsilon} not in (0, 1)")));
    }
    if !(theta > 0.0) {
        return Err(Error::range(format!("theta = {theta} must be positive")));
    }
    if i == 0 || i >= n {
        return Err(Error::range(format!("i = {i} not in 1..={}", n - 1)));
    }
    let delta = delta_1k(n, k, theta)?;
    let base = (k * k) as f64 * (-theta).exp_m1().powi(2) / -(-theta * n as f64).exp_m1();
    let denominator = base - i as f64 * delta;
    if !(denominator > 0.0) {
        return Err(Error::VacuousBound(format!(
            "k^2 (1 - e^-theta)^2 / (1 - e^-theta n) - i Delta = {denominator} is not positive"
        )));
    }
    let m = (2.0 * (n * n) as f64 * (1.0 / epsilon).ln() / (denominator * denominator)).ceil();
    Ok(BordaBound {
        delta_1k: delta,
        base,
        denominator,
        m: m as u64,
    })
}

/// Fraction of `trials` in which Borda on `m` top-k draws from `M(e, theta)`
/// puts item `i` ahead of item `i + 1` (1-based). Trial `t` uses stream
/// `rng.fork(t)`, so the result does not depend on scheduling.
pub fn empirical_pair_accuracy(
    n: usize,
    k: usize,
    theta: f64,
    i: usize,
    m: usize,
    trials: usize,
    rng: &RandomSource,
) -> Result<f64> {
    if i == 0 || i >= n {
        return Err(Error::range(format!("i = {i} not in 1..={}", n - 1)));
    }
    if m == 0 || trials == 0 {
        return Err(Error::range("m and trials must be positive"));
    }
    let model = MallowsModel::centered(n, theta)?;
    model.topk_sampler(k)?;
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng.fork(t as u64);
            let sample = model.sample_topk(k, m, &mut stream).expect("k validated");
            let scores = borda_scores(&sample).expect("non-empty sample");
            let (a, b) = (i - 1, i);
            usize::from((scores[a], a) < (scores[b], b))
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}
