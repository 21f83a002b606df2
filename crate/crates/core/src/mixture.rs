//! Concentric two-component mixtures and expert separation.
//!
//! Experts draw from `M(sigma0, theta_g)` and non-experts from the flatter
//! `M(sigma0, theta_b)`. A ranking's mean distance to the rest of the sample
//! is smaller, in expectation, for experts, so a one-dimensional split of
//! those means recovers the two groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{borda, estimate_theta_mle};
use crate::model::MallowsModel;
use crate::rankings::{topk_pair_distance, Permutation, TopKRanking};
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Expert,
    #[serde(rename = "nonexpert")]
    NonExpert,
}

impl Component {
    pub fn as_str(self) -> &'static str {
        match self {
            Component::Expert => "expert",
            Component::NonExpert => "nonexpert",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expert" => Ok(Component::Expert),
            "nonexpert" => Ok(Component::NonExpert),
            other => Err(Error::invalid(format!("unknown component label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConcentricMixture {
    sigma0: Permutation,
    theta_g: f64,
    theta_b: f64,
    r: f64,
    expert: MallowsModel,
    nonexpert: MallowsModel,
}

impl ConcentricMixture {
    /// Requires `theta_b <= theta_g` and `r` in `[0, 1]`; equal dispersions
    /// are accepted so that a single model is a special case.
    pub fn new(sigma0: Permutation, theta_g: f64, theta_b: f64, r: f64) -> Result<Self> {
        if !(theta_b <= theta_g) {
            return Err(Error::invalid(format!(
                "expert dispersion {theta_g} must be at least the non-expert dispersion {theta_b}"
            )));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::range(format!("r = {r} not in [0, 1]")));
        }
        Ok(ConcentricMixture {
            expert: MallowsModel::new(sigma0.clone(), theta_g)?,
            nonexpert: MallowsModel::new(sigma0.clone(), theta_b)?,
            sigma0,
            theta_g,
            theta_b,
            r,
        })
    }

    pub fn sigma0(&self) -> &Permutation {
        &self.sigma0
    }

    pub fn theta_g(&self) -> f64 {
        self.theta_g
    }

    pub fn theta_b(&self) -> f64 {
        self.theta_b
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn expert_model(&self) -> &MallowsModel {
        &self.expert
    }

    pub fn nonexpert_model(&self) -> &MallowsModel {
        &self.nonexpert
    }

    pub fn log_probability(&self, sigma: &TopKRanking) -> Result<f64> {
        let g = self.expert.log_topk_probability(sigma)?;
        let b = self.nonexpert.log_topk_probability(sigma)?;
        Ok(if self.r == 1.0 {
            g
        } else if self.r == 0.0 {
            b
        } else {
            let x = self.r.ln() + g;
            let y = (-self.r).ln_1p() + b;
            let hi = x.max(y);
            hi + ((x - hi).exp() + (y - hi).exp()).ln()
        })
    }
}

/// True component of each draw. Kept apart from the sample so that fitting
/// code never sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    labels: Vec<Component>,
}

impl GroundTruth {
    pub fn new(labels: Vec<Component>) -> Self {
        GroundTruth { labels }
    }

    pub fn labels(&self) -> &[Component] {
        &self.labels
    }

    pub fn expert_fraction(&self) -> f64 {
        let experts = self
            .labels
            .iter()
            .filter(|&&c| c == Component::Expert)
            .count();
        experts as f64 / self.labels.len().max(1) as f64
    }

    /// Fraction of wrong labels under the better of the two matchings
    /// between predicted and true components.
    pub fn misclassification(&self, predicted: &[Component]) -> Result<f64> {
        if predicted.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: predicted.len(),
            });
        }
        if predicted.is_empty() {
            return Err(Error::EmptySample);
        }
        let wrong = self
            .labels
            .iter()
            .zip(predicted)
            .filter(|(a, b)| a != b)
            .count();
        let m = predicted.len();
        Ok(wrong.min(m - wrong) as f64 / m as f64)
    }
}

/// `m` draws, each from the expert component with probability `r`.
pub fn sample_mixture(
    mix: &ConcentricMixture,
    k: usize,
    m: usize,
    rng: &mut RandomSource,
) -> Result<(Vec<TopKRanking>, GroundTruth)> {
    let mut experts = mix.expert.topk_sampler(k)?;
    let mut others = mix.nonexpert.topk_sampler(k)?;
    let mut sample = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        if rng.uniform() < mix.r {
            sample.push(experts.draw(rng));
            labels.push(Component::Expert);
        } else {
            sample.push(others.draw(rng));
            labels.push(Component::NonExpert);
        }
    }
    Ok((sample, GroundTruth::new(labels)))
}

/// `m_g` expert draws followed by `m_b` non-expert draws.
pub fn sample_components(
    mix: &ConcentricMixture,
    k: usize,
    m_g: usize,
    m_b: usize,
    rng: &mut RandomSource,
) -> Result<(Vec<TopKRanking>, GroundTruth)> {
    let mut sample = mix.expert.sample_topk(k, m_g, rng)?;
    sample.extend(mix.nonexpert.sample_topk(k, m_b, rng)?);
    let mut labels = vec![Component::Expert; m_g];
    labels.extend(std::iter::repeat_n(Component::NonExpert, m_b));
    Ok((sample, GroundTruth::new(labels)))
}

fn check_sample(sample: &[TopKRanking]) -> Result<usize> {
    if sample.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 rankings, got {}",
            sample.len()
        )));
    }
    let n = sample[0].n();
    if let Some(bad) = sample.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.n(),
        });
    }
    Ok(n)
}

/// Sums of top-k distances from each ranking to every other one. Integer
/// sums, so the result does not depend on the parallel schedule.
pub fn distance_sums(sample: &[TopKRanking]) -> Result<Vec<u64>> {
    check_sample(sample)?;
    let lookups: Vec<Vec<usize>> = sample.iter().map(|s| s.rank_lookup()).collect();
    Ok((0..sample.len())
        .into_par_iter()
        .map(|i| {
            (0..sample.len())
                .filter(|&j| j != i)
                .map(|j| topk_pair_distance(&sample[i], &lookups[i], &sample[j], &lookups[j]))
                .sum()
        })
        .collect())
}

/// `delta_sigma = (1 / (m - 1)) sum_{sigma' != sigma} d(sigma, sigma')`.
pub fn mean_distances(sample: &[TopKRanking]) -> Result<Vec<f64>> {
    let sums = distance_sums(sample)?;
    let denom = (sample.len() - 1) as f64;
    Ok(sums.into_iter().map(|s| s as f64 / denom).collect())
}

/// Counterparts per ranking needed so that a sampled mean distance is
/// within `target` of its expectation with probability `1 - epsilon`.
pub fn hoeffding_draws(n: usize, target: f64, epsilon: f64) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::range(format!(
            "target accuracy {target} must be positive"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::range(format!("epsilon = {epsilon} not in (0, 1)")));
    }
    let range = (n * n.saturating_sub(1)) as f64 / 2.0;
    Ok(((range / target).powi(2) * (2.0 / epsilon).ln() / 2.0).ceil() as usize)
}

/// Mean distances estimated from `t` random counterparts per ranking (see
/// [`hoeffding_draws`]); exact when `t >= m - 1`. Ranking `i` draws from
/// `rng.fork(i)`.
pub fn approx_mean_distances(
    sample: &[TopKRanking],
    target: f64,
    epsilon: f64,
    rng: &RandomSource,
) -> Result<Vec<f64>> {
    let n = check_sample(sample)?;
    let t = hoeffding_draws(n, target, epsilon)?;
    let m = sample.len();
    if t >= m - 1 {
        return mean_distances(sample);
    }
    let lookups: Vec<Vec<usize>> = sample.iter().map(|s| s.rank_lookup()).collect();
    Ok((0..m)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.fork(i as u64);
            let total: u64 = (0..t)
                .map(|_| {
                    let mut j = stream.below(m - 1);
                    if j >= i {
                        j += 1;
                    }
                    topk_pair_distance(&sample[i], &lookups[i], &sample[j], &lookups[j])
                })
                .sum();
            total as f64 / t as f64
        })
        .collect())
}

/// How the sorted mean distances are cut in two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMethod {
    /// Exact one-dimensional 2-means.
    #[default]
    #[serde(rename = "2means")]
    TwoMeans,
    /// Cut at the widest gap, as single linkage does in one dimension.
    Gap,
}

impl std::str::FromStr for SplitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2means" | "two-means" | "kmeans" => Ok(SplitMethod::TwoMeans),
            "gap" => Ok(SplitMethod::Gap),
            other => Err(Error::invalid(format!("unknown split method {other:?}"))),
        }
    }
}

/// Position `p` such that `sorted[..p]` and `sorted[p..]` are the two
/// clusters, or `None` when all values are equal.
fn split_point(sorted: &[f64], method: SplitMethod) -> Option<usize> {
    let m = sorted.len();
    let candidates = (1..m).filter(|&p| sorted[p - 1] < sorted[p]);
    match method {
        SplitMethod::TwoMeans => {
            let total: f64 = sorted.iter().sum();
            let mut prefix = vec![0.0; m + 1];
            for (i, &x) in sorted.iter().enumerate() {
                prefix[i + 1] = prefix[i] + x;
            }
            // Minimising the within-cluster sum of squares is maximising
            // p (m - p) (mean_left - mean_right)^2.
            let mut best: Option<(f64, usize)> = None;
            for p in candidates {
                let left = prefix[p] / p as f64;
                let right = (total - prefix[p]) / (m - p) as f64;
                let score = (p * (m - p)) as f64 * (right - left).powi(2);
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, p));
                }
            }
            best.map(|(_, p)| p)
        }
        SplitMethod::Gap => {
            let mut best: Option<(f64, usize)> = None;
            for p in candidates {
                let gap = sorted[p] - sorted[p - 1];
                if best.is_none_or(|(g, _)| gap > g) {
                    best = Some((gap, p));
                }
            }
            best.map(|(_, p)| p)
        }
    }
}

/// Fitted concentric-mixture parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedParameters {
    pub theta_g: f64,
    pub theta_b: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub deltas: Vec<f64>,
    pub labels: Vec<Component>,
    /// Rankings with `delta <= threshold` are labelled experts.
    pub threshold: f64,
    pub fitted: FittedParameters,
    /// Borda consensus of the whole sample, used as the common centre.
    pub consensus: Permutation,
    /// All mean distances were equal; everything is labelled expert.
    pub degenerate: bool,
    pub method: SplitMethod,
}

impl SeparationResult {
    pub fn experts(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Component::Expert)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn separate(sample: &[TopKRanking], method: SplitMethod) -> Result<SeparationResult> {
    let deltas = mean_distances(sample)?;
    separate_with_deltas(sample, deltas, method)
}

/// Separation from precomputed mean distances (exact or approximate).
pub fn separate_with_deltas(
    sample: &[TopKRanking],
    deltas: Vec<f64>,
    method: SplitMethod,
) -> Result<SeparationResult> {
    check_sample(sample)?;
    if deltas.len() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            got: deltas.len(),
        });
    }
    let mut sorted = deltas.clone();
    sorted.sort_by(f64::total_cmp);
    let split = split_point(&sorted, method);
    let threshold = match split {
        Some(p) => (sorted[p - 1] + sorted[p]) / 2.0,
        None => sorted[0],
    };
    let labels: Vec<Component> = deltas
        .iter()
        .map(|&d| {
            if d <= threshold {
                Component::Expert
            } else {
                Component::NonExpert
            }
        })
        .collect();

    let consensus = borda(sample)?;
    let pick = |c: Component| -> Vec<TopKRanking> {
        sample
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == c)
            .map(|(s, _)| s.clone())
            .collect()
    };
    let experts = pick(Component::Expert);
    let others = pick(Component::NonExpert);
    let theta_g = estimate_theta_mle(&experts, &consensus)?.theta;
    let theta_b = if others.is_empty() {
        theta_g
    } else {
        estimate_theta_mle(&others, &consensus)?.theta
    };
    Ok(SeparationResult {
        fitted: FittedParameters {
            theta_g,
            theta_b,
            r: experts.len() as f64 / sample.len() as f64,
        },
        deltas,
        labels,
        threshold,
        consensus,
        degenerate: split.is_none(),
        method,
    })
}

/// `(c - 2) r E[d(gamma, sigma0)]`, the guaranteed gap between the expected
/// mean distances of non-experts and experts.
pub fn separation_gap(c: f64, r: f64, expected_gamma_distance: f64) -> Result<f64> {
    if !(c > 2.0) {
        return Err(Error::VacuousBound(format!("c = {c} must exceed 2")));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::range(format!("r = {r} not in (0, 1]")));
    }
    if !(expected_gamma_distance > 0.0) {
        return Err(Error::range(format!(
            "expected expert distance {expected_gamma_distance} must be positive"
        )));
    }
    Ok((c - 2.0) * r * expected_gamma_distance)
}

/// Sample size after which the mean-distance split separates both
/// components with probability `1 - epsilon`.
pub fn min_sample_size(
    n: usize,
    c: f64,
    r: f64,
    expected_gamma_distance: f64,
    epsilon: f64,
) -> Result<u64> {
    let gap = separation_gap(c, r, expected_gamma_distance)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::range(format!("epsilon = {epsilon} not in (0, 1)")));
    }
    let ratio = (n * n.saturating_sub(1)) as f64 / gap;
    Ok((ratio * ratio * (2.0 / epsilon).ln() / 2.0).ceil() as u64)
}

pub fn mixture_log_likelihood(mix: &ConcentricMixture, sample: &[TopKRanking]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    sample.iter().map(|s| mix.log_probability(s)).sum()
}

/// Mixture fitted by separation: Borda centre, per-cluster dispersions and
/// the expert fraction. If the cluster with smaller mean distance ends up
/// with the flatter dispersion, the roles are swapped.
pub fn fit_mixture(sample: &[TopKRanking]) -> Result<ConcentricMixture> {
    fit_mixture_with(sample, SplitMethod::TwoMeans)
}

pub fn fit_mixture_with(sample: &[TopKRanking], method: SplitMethod) -> Result<ConcentricMixture> {
    mixture_from_separation(&separate(sample, method)?)
}

pub fn mixture_from_separation(sep: &SeparationResult) -> Result<ConcentricMixture> {
    let FittedParameters {
        theta_g,
        theta_b,
        r,
    } = sep.fitted;
    if theta_g >= theta_b {
        ConcentricMixture::new(sep.consensus.clone(), theta_g, theta_b, r)
    } else {
        ConcentricMixture::new(sep.consensus.clone(), theta_b, theta_g, 1.0 - r)
    }
}
