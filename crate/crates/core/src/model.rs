//! Single-component Mallows model over top-k rankings.
//!
//! With the consensus relabelled to the identity, the inversion-vector
//! entries of a ranking are independent truncated geometric variables:
//! entry `j` (1-based) takes value `r` in `0..=n-j` with probability
//! `exp(-theta r) / psi_{n,j}`. A top-k list fixes the first `k` entries and
//! leaves the rest free, so its probability is the product of the first `k`
//! marginals, and sampling one only needs those `k` draws.

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::oracle;
use crate::rankings::{distance_to_full_items, Permutation, TopKRanking};
use crate::rng::RandomSource;

/// Largest dispersion used by estimators; beyond it the model is a point mass
/// for every practical purpose.
pub const THETA_CAP: f64 = 50.0;

/// Lower end of the bisection bracket for dispersion searches.
pub const THETA_FLOOR: f64 = 1e-9;

/// Above this `n` the pairwise marginal is estimated by Monte Carlo.
pub const EXACT_MARGINAL_MAX_N: usize = 8;

const MARGINAL_DRAWS: usize = 100_000;

/// `ln sum_{x < m} exp(-theta x)`.
fn log_geometric_norm(theta: f64, m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    if theta == 0.0 {
        return (m as f64).ln();
    }
    (-(-theta * m as f64).exp_m1()).ln() - (-(-theta).exp_m1()).ln()
}

/// Mean of the truncated geometric law on `0..m`.
pub(crate) fn truncated_geometric_mean(theta: f64, m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let mf = m as f64;
    if theta == 0.0 {
        return (mf - 1.0) / 2.0;
    }
    if theta * mf < 1e-3 {
        let s = mf * mf - 1.0;
        return (mf - 1.0) / 2.0 - theta * s / 12.0 + theta.powi(3) * s * (mf * mf + 1.0) / 720.0;
    }
    1.0 / theta.exp_m1() - mf / (theta * mf).exp_m1()
}

/// Variance of the truncated geometric law on `0..m`.
pub(crate) fn truncated_geometric_variance(theta: f64, m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let mf = m as f64;
    let s = mf * mf - 1.0;
    if theta == 0.0 {
        return s / 12.0;
    }
    if theta * mf < 1e-3 {
        return s / 12.0 - theta * theta * s * (mf * mf + 1.0) / 240.0;
    }
    let term = |x: f64| 1.0 / (x.exp_m1() * -(-x).exp_m1());
    term(theta) - mf * mf * term(theta * mf)
}

/// Inverse-CDF draw from the truncated geometric law on `0..m`.
fn truncated_geometric_draw(theta: f64, m: usize, u: f64) -> usize {
    if m <= 1 {
        return 0;
    }
    let x = if theta == 0.0 {
        u * m as f64
    } else {
        let mass = -(-theta * m as f64).exp_m1();
        -(-u * mass).ln_1p() / theta
    };
    (x.floor() as usize).min(m - 1)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::range(format!("k = {k} not in 1..={n}")));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta >= 0.0) || theta.is_infinite() {
        return Err(Error::range(format!(
            "theta = {theta} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// `E[d(sigma, sigma0)]` for a top-k draw from a Mallows model with `n` items.
pub fn expected_distance(n: usize, k: usize, theta: f64) -> Result<f64> {
    check_k(n, k)?;
    check_theta(theta)?;
    Ok((1..=k)
        .map(|j| truncated_geometric_mean(theta, n - j + 1))
        .sum())
}

/// `Var[d(sigma, sigma0)]` for a top-k draw.
pub fn variance_distance(n: usize, k: usize, theta: f64) -> Result<f64> {
    check_k(n, k)?;
    check_theta(theta)?;
    Ok((1..=k)
        .map(|j| truncated_geometric_variance(theta, n - j + 1))
        .sum())
}

/// Expected distance under the uniform law, `k (2n - k - 1) / 4`.
pub fn uniform_expected_distance(n: usize, k: usize) -> f64 {
    (k * (2 * n - k - 1)) as f64 / 4.0
}

/// Solves `expected_distance(n, k, theta) = Σ_i targets` style equations by
/// bisection on `[THETA_FLOOR, THETA_CAP]`; `f` must be decreasing in theta.
pub(crate) fn bisect_decreasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (THETA_FLOOR, THETA_CAP);
    if f(lo) <= target {
        return lo;
    }
    if f(hi) >= target {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dispersion whose top-k expected distance equals `target`.
pub fn theta_for_expected_distance(n: usize, k: usize, target: f64) -> Result<f64> {
    check_k(n, k)?;
    let limit = uniform_expected_distance(n, k);
    if !(target > 0.0) || target > limit * (1.0 + 1e-12) {
        return Err(Error::range(format!(
            "target expected distance {target} not in (0, {limit}]"
        )));
    }
    Ok(bisect_decreasing(
        |t| expected_distance(n, k, t).expect("validated"),
        target,
    ))
}

/// Probability that item `i` is ranked ahead of item `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseMarginal {
    pub probability: f64,
    /// Zero when computed exactly.
    pub std_error: f64,
    pub exact: bool,
}

/// Mallows model `M(sigma0, theta)` over rankings of `n` items.
#[derive(Debug, Clone)]
pub struct MallowsModel {
    sigma0: Permutation,
    consensus: Vec<usize>,
    theta: f64,
    /// `ln psi_{n,j}` for `j = 1..=n`; the last factor is always zero.
    log_psi: Vec<f64>,
    /// `log_psi_prefix[j] = sum_{l <= j} ln psi_{n,l}`.
    log_psi_prefix: Vec<f64>,
}

impl MallowsModel {
    pub fn new(sigma0: Permutation, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let n = sigma0.n();
        let log_psi: Vec<f64> = (1..=n)
            .map(|j| log_geometric_norm(theta, n - j + 1))
            .collect();
        let mut log_psi_prefix = Vec::with_capacity(n + 1);
        log_psi_prefix.push(0.0);
        let mut acc = 0.0;
        for &l in &log_psi {
            acc += l;
            log_psi_prefix.push(acc);
        }
        Ok(MallowsModel {
            consensus: sigma0.order(),
            sigma0,
            theta,
            log_psi,
            log_psi_prefix,
        })
    }

    /// Model centred at the identity ranking.
    pub fn centered(n: usize, theta: f64) -> Result<Self> {
        MallowsModel::new(Permutation::identity(n), theta)
    }

    pub fn n(&self) -> usize {
        self.sigma0.n()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma0(&self) -> &Permutation {
        &self.sigma0
    }

    fn check_n(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got,
            });
        }
        Ok(())
    }

    /// Normalisation factor `psi_{n,j}` for 1-based `j` in `1..=n`.
    pub fn psi_factor(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.n() {
            return Err(Error::range(format!("j = {j} not in 1..={}", self.n())));
        }
        Ok(self.log_psi[j - 1].exp())
    }

    /// `ln prod_{j=1}^{upto} psi_{n,j}`.
    pub fn log_psi(&self, upto: usize) -> Result<f64> {
        if upto > self.n() {
            return Err(Error::range(format!(
                "upto = {upto} exceeds n = {}",
                self.n()
            )));
        }
        Ok(self.log_psi_prefix[upto])
    }

    /// `prod_{j=1}^{upto} psi_{n,j}`; `upto = n - 1` gives the full normaliser.
    pub fn psi(&self, upto: usize) -> Result<f64> {
        Ok(self.log_psi(upto)?.exp())
    }

    /// `P(V_j = r) = exp(-theta r) / psi_{n,j}` with `j` 1-based.
    pub fn v_marginal(&self, j: usize, r: usize) -> Result<f64> {
        let n = self.n();
        if j == 0 || j >= n.max(2) {
            return Err(Error::range(format!("j = {j} not in 1..={}", n - 1)));
        }
        if r > n - j {
            return Err(Error::range(format!("r = {r} not in 0..={}", n - j)));
        }
        Ok((-self.theta * r as f64 - self.log_psi[j - 1]).exp())
    }

    /// Distance from a top-k list to the consensus ranking.
    pub fn distance(&self, sigma: &TopKRanking) -> Result<u64> {
        self.check_n(sigma.n())?;
        Ok(distance_to_full_items(sigma.items(), &self.sigma0))
    }

    /// `ln P(sigma) = -theta d(sigma, sigma0) - sum_{j<=k} ln psi_{n,j}`.
    pub fn log_topk_probability(&self, sigma: &TopKRanking) -> Result<f64> {
        let d = self.distance(sigma)?;
        let dist_term = if d == 0 { 0.0 } else { -self.theta * d as f64 };
        Ok(dist_term - self.log_psi_prefix[sigma.k()])
    }

    pub fn topk_probability(&self, sigma: &TopKRanking) -> Result<f64> {
        Ok(self.log_topk_probability(sigma)?.exp())
    }

    /// Reusable sampler for top-k lists of a fixed length.
    pub fn topk_sampler(&self, k: usize) -> Result<TopKSampler<'_>> {
        check_k(self.n(), k)?;
        Ok(TopKSampler {
            model: self,
            k,
            free: Fenwick::full(self.n()),
            scratch: Vec::with_capacity(k),
        })
    }

    /// `count` independent top-k draws.
    pub fn sample_topk(
        &self,
        k: usize,
        count: usize,
        rng: &mut RandomSource,
    ) -> Result<Vec<TopKRanking>> {
        let mut sampler = self.topk_sampler(k)?;
        Ok((0..count).map(|_| sampler.draw(rng)).collect())
    }

    /// Full ranking drawn from the model conditioned on its top-k list being `sigma`.
    pub fn sample_linear_extension(
        &self,
        sigma: &TopKRanking,
        rng: &mut RandomSource,
    ) -> Result<Permutation> {
        self.check_n(sigma.n())?;
        let n = self.n();
        let mut free = Fenwick::full(n);
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for &item in sigma.items() {
            let relabelled = self.sigma0.rank(item);
            free.add(relabelled, -1);
            order.push(item);
        }
        for position in sigma.k()..n {
            let v = truncated_geometric_draw(self.theta, n - position, rng.uniform());
            let relabelled = free.select(v);
            free.add(relabelled, -1);
            order.push(self.consensus[relabelled]);
        }
        Permutation::from_order(&order)
    }

    pub fn expected_distance(&self, k: usize) -> Result<f64> {
        expected_distance(self.n(), k, self.theta)
    }

    pub fn variance_distance(&self, k: usize) -> Result<f64> {
        variance_distance(self.n(), k, self.theta)
    }

    /// `P(item i ranked ahead of item j)`: exact enumeration up to
    /// [`EXACT_MARGINAL_MAX_N`] items, Monte Carlo with 10^5 draws beyond.
    pub fn pairwise_marginal(
        &self,
        i: usize,
        j: usize,
        rng: &mut RandomSource,
    ) -> Result<PairwiseMarginal> {
        let n = self.n();
        if i >= n || j >= n || i == j {
            return Err(Error::range(format!(
                "items ({i}, {j}) must be distinct and below {n}"
            )));
        }
        if n <= EXACT_MARGINAL_MAX_N {
            let p = oracle::exact_pairwise_marginal(&self.sigma0, self.theta, i, j)?;
            return Ok(PairwiseMarginal {
                probability: p,
                std_error: 0.0,
                exact: true,
            });
        }
        let mut sampler = self.topk_sampler(n)?;
        let mut hits = 0usize;
        for _ in 0..MARGINAL_DRAWS {
            let s = sampler.draw(rng);
            let first = s.items().iter().find(|&&x| x == i || x == j);
            if first == Some(&i) {
                hits += 1;
            }
        }
        let p = hits as f64 / MARGINAL_DRAWS as f64;
        Ok(PairwiseMarginal {
            probability: p,
            std_error: (p * (1.0 - p) / MARGINAL_DRAWS as f64).sqrt(),
            exact: false,
        })
    }

    /// Sum of log-probabilities of the sample.
    pub fn log_likelihood(&self, sample: &[TopKRanking]) -> Result<f64> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        sample.iter().map(|s| self.log_topk_probability(s)).sum()
    }
}

/// Top-k sampler that reuses its order-statistics tree across draws, so each
/// draw costs `O(k log n)` after an `O(n)` setup.
#[derive(Debug)]
pub struct TopKSampler<'a> {
    model: &'a MallowsModel,
    k: usize,
    free: Fenwick,
    scratch: Vec<usize>,
}

impl TopKSampler<'_> {
    pub fn draw(&mut self, rng: &mut RandomSource) -> TopKRanking {
        let n = self.model.n();
        let theta = self.model.theta;
        self.scratch.clear();
        for position in 0..self.k {
            let v = truncated_geometric_draw(theta, n - position, rng.uniform());
            let relabelled = self.free.select(v);
            self.free.add(relabelled, -1);
            self.scratch.push(relabelled);
        }
        for &r in &self.scratch {
            self.free.add(r, 1);
        }
        let items = self
            .scratch
            .iter()
            .map(|&r| self.model.consensus[r])
            .collect();
        TopKRanking::from_parts_unchecked(n, items)
    }
}
