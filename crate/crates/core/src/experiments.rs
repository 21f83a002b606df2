//! Simulation protocols behind the `experiment` subcommands. Each repetition
//! draws from its own forked stream, so the output depends only on the
//! configuration and seed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    borda_estimate, eborda_with, estimate_theta_mle, partial_estimate_error, PartialError,
};
use crate::mixture::{
    mixture_from_separation, mixture_log_likelihood, sample_components, separate,
    separate_with_deltas, ConcentricMixture, SplitMethod,
};
use crate::model::{theta_for_expected_distance, uniform_expected_distance, MallowsModel};
use crate::rankings::{topk_pair_distance, Permutation, TopKRanking};
use crate::rng::RandomSource;

/// Mean, minimum and maximum of a set of repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Summary { mean, min, max }
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::range("repetitions must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationExperiment {
    pub n: usize,
    pub k: usize,
    pub m_g: usize,
    pub m_b: usize,
    /// Expert expected distances `E[d(gamma, sigma0)]`.
    pub gamma_distances: Vec<f64>,
    /// Ratios `c = E[d(beta, sigma0)] / E[d(gamma, sigma0)]`.
    pub c_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub method: SplitMethod,
}

impl Default for SeparationExperiment {
    fn default() -> Self {
        SeparationExperiment {
            n: 30,
            k: 10,
            m_g: 40,
            m_b: 60,
            gamma_distances: (0..10).map(|i| (3 + 5 * i) as f64).collect(),
            c_grid: (1..=13).map(|i| (3 * i) as f64).collect(),
            reps: 10,
            seed: 0,
            method: SplitMethod::TwoMeans,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationPoint {
    pub gamma_distance: f64,
    pub c: f64,
    pub theta_g: f64,
    pub theta_b: f64,
    /// Misclassification percentage per repetition.
    pub errors: Vec<f64>,
}

impl SeparationPoint {
    pub fn beta_distance(&self) -> f64 {
        self.c * self.gamma_distance
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.errors)
    }
}

/// Runs every feasible `(E_gamma, c)` pair; pairs whose non-expert distance
/// would exceed the uniform level are skipped. A fresh random consensus is
/// drawn for each repetition.
pub fn run_separation(cfg: &SeparationExperiment) -> Result<Vec<SeparationPoint>> {
    check_reps(cfg.reps)?;
    if cfg.m_g + cfg.m_b < 2 {
        return Err(Error::range("need at least two rankings"));
    }
    let limit = uniform_expected_distance(cfg.n, cfg.k);
    let mut grid = Vec::new();
    for &g in &cfg.gamma_distances {
        for &c in &cfg.c_grid {
            if c * g <= limit {
                grid.push((
                    g,
                    c,
                    theta_for_expected_distance(cfg.n, cfg.k, g)?,
                    theta_for_expected_distance(cfg.n, cfg.k, c * g)?,
                ));
            }
        }
    }
    let root = RandomSource::new(cfg.seed);
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|p| (0..cfg.reps).map(move |q| (p, q)))
        .collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(p, q)| -> Result<f64> {
            let (_, _, theta_g, theta_b) = grid[p];
            let mut rng = root.fork(((p as u64) << 32) | q as u64);
            let sigma0 = Permutation::new(rng.shuffled(cfg.n))?;
            let r = cfg.m_g as f64 / (cfg.m_g + cfg.m_b) as f64;
            let mix = ConcentricMixture::new(sigma0, theta_g, theta_b, r)?;
            let (sample, truth) = sample_components(&mix, cfg.k, cfg.m_g, cfg.m_b, &mut rng)?;
            let sep = separate(&sample, cfg.method)?;
            Ok(100.0 * truth.misclassification(&sep.labels)?)
        })
        .collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(p, &(g, c, theta_g, theta_b))| SeparationPoint {
            gamma_distance: g,
            c,
            theta_g,
            theta_b,
            errors: errors[p * cfg.reps..(p + 1) * cfg.reps].to_vec(),
        })
        .collect())
}

pub fn separation_csv(points: &[SeparationPoint]) -> String {
    let mut out =
        String::from("gamma_distance,c,beta_distance,theta_g,theta_b,mean_error_pct,min_error_pct,max_error_pct\n");
    for p in points {
        let s = p.summary();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.gamma_distance,
            p.c,
            p.beta_distance(),
            p.theta_g,
            p.theta_b,
            s.mean,
            s.min,
            s.max
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbordaExperiment {
    pub n: usize,
    pub k: usize,
    pub m_g: usize,
    pub m_b: usize,
    pub expert_distance: f64,
    pub nonexpert_distance: f64,
    pub reps: usize,
    pub seed: u64,
    pub method: SplitMethod,
}

impl Default for EbordaExperiment {
    fn default() -> Self {
        EbordaExperiment {
            n: 30,
            k: 10,
            m_g: 4,
            m_b: 40,
            expert_distance: 10.0,
            nonexpert_distance: 75.0,
            reps: 10,
            seed: 0,
            method: SplitMethod::Gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbordaRow {
    pub size: usize,
    /// Per repetition.
    pub borda: Vec<PartialError>,
    pub eborda: Vec<PartialError>,
}

fn mids(errors: &[PartialError]) -> Summary {
    let mid: Vec<f64> = errors.iter().map(PartialError::mid).collect();
    Summary::of(&mid)
}

fn mean_of(errors: &[PartialError], f: impl Fn(&PartialError) -> u64) -> f64 {
    errors.iter().map(|e| f(e) as f64).sum::<f64>() / errors.len() as f64
}

impl EbordaRow {
    pub fn borda_mean(&self) -> f64 {
        mids(&self.borda).mean
    }

    pub fn eborda_mean(&self) -> f64 {
        mids(&self.eborda).mean
    }
}

/// Growing-sample protocol: experts first, then non-experts, estimating the
/// consensus after every added ranking with both methods.
pub fn run_eborda(cfg: &EbordaExperiment) -> Result<Vec<EbordaRow>> {
    check_reps(cfg.reps)?;
    let theta_g = theta_for_expected_distance(cfg.n, cfg.k, cfg.expert_distance)?;
    let theta_b = theta_for_expected_distance(cfg.n, cfg.k, cfg.nonexpert_distance)?;
    let total = cfg.m_g + cfg.m_b;
    if total == 0 {
        return Err(Error::range("empty sample"));
    }
    let root = RandomSource::new(cfg.seed);
    let per_rep: Vec<Vec<(PartialError, PartialError)>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<(PartialError, PartialError)>> {
            let mut rng = root.fork(rep as u64);
            let sigma0 = Permutation::new(rng.shuffled(cfg.n))?;
            let expert = MallowsModel::new(sigma0.clone(), theta_g)?;
            let other = MallowsModel::new(sigma0.clone(), theta_b)?;
            let mut sample = expert.sample_topk(cfg.k, cfg.m_g, &mut rng)?;
            sample.extend(other.sample_topk(cfg.k, cfg.m_b, &mut rng)?);
            (1..=total)
                .map(|size| {
                    let part = &sample[..size];
                    let b = partial_estimate_error(&borda_estimate(part)?, &sigma0)?;
                    let e = partial_estimate_error(&eborda_with(part, cfg.method)?, &sigma0)?;
                    Ok((b, e))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..total)
        .map(|s| EbordaRow {
            size: s + 1,
            borda: per_rep.iter().map(|r| r[s].0).collect(),
            eborda: per_rep.iter().map(|r| r[s].1).collect(),
        })
        .collect())
}

pub fn eborda_csv(rows: &[EbordaRow]) -> String {
    let mut out = String::from(
        "size,borda_error,borda_d_min,borda_d_max,eborda_error,eborda_d_min,eborda_d_max\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.size,
            r.borda_mean(),
            mean_of(&r.borda, |e| e.d_min),
            mean_of(&r.borda, |e| e.d_max),
            r.eborda_mean(),
            mean_of(&r.eborda, |e| e.d_min),
            mean_of(&r.eborda, |e| e.d_max),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoglikExperiment {
    pub n: usize,
    pub theta: f64,
    /// Consensus of the synthetic data, most preferred first.
    pub sigma0_order: Vec<usize>,
    pub m: usize,
    pub impostors: usize,
    pub reps: usize,
    pub seed: u64,
    /// Replaces the synthetic base sample when given.
    pub data: Option<Vec<TopKRanking>>,
}

impl Default for LoglikExperiment {
    fn default() -> Self {
        LoglikExperiment {
            n: 5,
            theta: 1.43,
            sigma0_order: vec![4, 0, 3, 2, 1],
            m: 98,
            impostors: 196,
            reps: 10,
            seed: 0,
            data: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoglikRow {
    pub impostors: usize,
    /// Per repetition.
    pub single: Vec<f64>,
    pub mixture: Vec<f64>,
}

/// Log-likelihoods of the fitted single model and the fitted mixture.
fn fit_both(sample: &[TopKRanking], sums: &[u64]) -> Result<(f64, f64)> {
    let denom = (sample.len() - 1) as f64;
    let deltas = sums.iter().map(|&s| s as f64 / denom).collect();
    let sep = separate_with_deltas(sample, deltas, SplitMethod::TwoMeans)?;
    let theta = estimate_theta_mle(sample, &sep.consensus)?.theta;
    let single = MallowsModel::new(sep.consensus.clone(), theta)?.log_likelihood(sample)?;
    let mix = mixture_from_separation(&sep)?;
    Ok((single, mixture_log_likelihood(&mix, sample)?))
}

/// Adds uniformly random full rankings one at a time to a Mallows sample and
/// refits both models after each addition.
pub fn run_loglik(cfg: &LoglikExperiment) -> Result<Vec<LoglikRow>> {
    check_reps(cfg.reps)?;
    let sigma0 = Permutation::from_order(&cfg.sigma0_order)?;
    let n = match &cfg.data {
        Some(d) => {
            if d.len() < 2 {
                return Err(Error::invalid("the loglik data needs at least 2 rankings"));
            }
            d[0].n()
        }
        None => {
            if sigma0.n() != cfg.n {
                return Err(Error::DimensionMismatch {
                    expected: cfg.n,
                    got: sigma0.n(),
                });
            }
            if cfg.m < 2 {
                return Err(Error::range("m must be at least 2"));
            }
            cfg.n
        }
    };
    let model = MallowsModel::new(sigma0, cfg.theta)?;
    let root = RandomSource::new(cfg.seed);
    let per_rep: Vec<Vec<(f64, f64)>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<(f64, f64)>> {
            let mut rng = root.fork(rep as u64);
            let mut sample = match &cfg.data {
                Some(d) => d.clone(),
                None => model.sample_topk(n, cfg.m, &mut rng)?,
            };
            let mut lookups: Vec<Vec<usize>> = sample.iter().map(|s| s.rank_lookup()).collect();
            let mut sums = vec![0u64; sample.len()];
            for i in 0..sample.len() {
                for j in i + 1..sample.len() {
                    let d = topk_pair_distance(&sample[i], &lookups[i], &sample[j], &lookups[j]);
                    sums[i] += d;
                    sums[j] += d;
                }
            }
            let mut out = Vec::with_capacity(cfg.impostors + 1);
            out.push(fit_both(&sample, &sums)?);
            for _ in 0..cfg.impostors {
                let fresh = Permutation::new(rng.shuffled(n))?.to_topk();
                let lookup = fresh.rank_lookup();
                let mut own = 0;
                for (j, s) in sample.iter().enumerate() {
                    let d = topk_pair_distance(&fresh, &lookup, s, &lookups[j]);
                    sums[j] += d;
                    own += d;
                }
                sample.push(fresh);
                lookups.push(lookup);
                sums.push(own);
                out.push(fit_both(&sample, &sums)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((0..=cfg.impostors)
        .map(|step| LoglikRow {
            impostors: step,
            single: per_rep.iter().map(|r| r[step].0).collect(),
            mixture: per_rep.iter().map(|r| r[step].1).collect(),
        })
        .collect())
}

pub fn loglik_csv(rows: &[LoglikRow]) -> String {
    let mut out = String::from(
        "impostors,single_ll,single_min,single_max,mixture_ll,mixture_min,mixture_max\n",
    );
    for r in rows {
        let s = Summary::of(&r.single);
        let x = Summary::of(&r.mixture);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.impostors, s.mean, s.min, s.max, x.mean, x.min, x.max
        ));
    }
    out
}

/// Parses the numeric CSV tables written by this module.
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
    let header: Vec<String> = match lines.next() {
        Some((_, h)) => h.split(',').map(|s| s.trim().to_string()).collect(),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty table".into(),
            })
        }
    };
    let rows = lines
        .map(|(i, l)| {
            let row: Vec<f64> = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if row.len() != header.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} fields, got {}", header.len(), row.len()),
                });
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separation_grid_skips_infeasible_ratios() {
        let cfg = SeparationExperiment {
            gamma_distances: vec![20.0],
            c_grid: vec![3.0, 6.0, 7.0],
            reps: 2,
            seed: 1,
            ..Default::default()
        };
        let points = run_separation(&cfg).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[1].c, 6.0);
        let (header, rows) = parse_table(&separation_csv(&points)).unwrap();
        assert_eq!(header.len(), 8);
        assert_eq!(rows[0][5], points[0].summary().mean);
    }

    #[test]
    fn eborda_rows_cover_every_size() {
        let cfg = EbordaExperiment {
            m_b: 6,
            reps: 2,
            seed: 3,
            ..Default::default()
        };
        let rows = run_eborda(&cfg).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.borda.len() == 2));
        let (_, table) = parse_table(&eborda_csv(&rows)).unwrap();
        assert_eq!(table.len(), 10);
    }

    #[test]
    fn loglik_incremental_sums_match_recomputation() {
        let cfg = LoglikExperiment {
            m: 12,
            impostors: 5,
            reps: 1,
            seed: 9,
            ..Default::default()
        };
        let rows = run_loglik(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        // Rebuild the final sample with the same stream and refit from scratch.
        let model = MallowsModel::new(
            Permutation::from_order(&cfg.sigma0_order).unwrap(),
            cfg.theta,
        )
        .unwrap();
        let mut rng = RandomSource::new(cfg.seed).fork(0);
        let mut sample = model.sample_topk(5, cfg.m, &mut rng).unwrap();
        for _ in 0..cfg.impostors {
            sample.push(Permutation::new(rng.shuffled(5)).unwrap().to_topk());
        }
        let sums = crate::mixture::distance_sums(&sample).unwrap();
        let (single, mixture) = fit_both(&sample, &sums).unwrap();
        assert_eq!(rows[5].single[0], single);
        assert_eq!(rows[5].mixture[0], mixture);
    }
}
