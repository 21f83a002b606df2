use std::collections::HashMap;

use mallows_topk::oracle::{
    enumerate_topk, exact_pairwise_marginal, extension_conditionals, linear_extension_probability,
    ExhaustiveTable,
};
use mallows_topk::{
    estimate_theta_mle, expected_distance, invert_topk, variance_distance, MallowsModel,
    Permutation, RandomSource, TopKRanking,
};

const THETAS: [f64; 5] = [0.0, 0.1, 0.7, 2.0, 5.0];

#[test]
fn topk_probability_is_the_sum_over_extensions() {
    for n in 2..=6 {
        let mut rng = RandomSource::new(n as u64);
        let sigma0 = Permutation::new(rng.shuffled(n)).unwrap();
        for &theta in &THETAS {
            let model = MallowsModel::new(sigma0.clone(), theta).unwrap();
            for k in 1..n {
                let mut total = 0.0;
                for t in enumerate_topk(n, k).unwrap() {
                    let exact = linear_extension_probability(&sigma0, theta, &t).unwrap();
                    let log_p = model.log_topk_probability(&t).unwrap();
                    assert!(
                        (log_p - exact.ln()).abs() < 1e-12,
                        "n={n} k={k} theta={theta}"
                    );
                    total += log_p.exp();
                }
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn moments_match_enumeration() {
    for n in 2..=6 {
        for k in 1..n {
            for &theta in &THETAS {
                let table = ExhaustiveTable::new(&Permutation::identity(n), k, theta).unwrap();
                let mean = expected_distance(n, k, theta).unwrap();
                let var = variance_distance(n, k, theta).unwrap();
                assert!(
                    (mean - table.expected_distance()).abs() < 1e-10,
                    "n={n} k={k} {theta}"
                );
                assert!(
                    (var - table.variance_distance()).abs() < 1e-10,
                    "n={n} k={k} {theta}"
                );
            }
        }
    }
}

#[test]
fn frozen_oracle_values() {
    assert!((expected_distance(6, 3, 0.7).unwrap() - 2.453_280_676_724_592).abs() < 1e-10);
    assert!((variance_distance(6, 3, 0.7).unwrap() - 3.416_340_587_233_443).abs() < 1e-10);
    let model = MallowsModel::centered(3, 1.0).unwrap();
    let top = TopKRanking::new(3, vec![0]).unwrap();
    assert!((model.topk_probability(&top).unwrap() - 0.665_240_955_774_821_8).abs() < 1e-12);
    let e = Permutation::identity(3);
    assert!(
        (exact_pairwise_marginal(&e, 1.0, 0, 1).unwrap() - 0.731_058_578_630_004_8).abs() < 1e-12
    );
    for n in 2..=6 {
        let q = (n * (n - 1)) as f64 / 4.0;
        assert!((expected_distance(n, n - 1, 0.0).unwrap() - q).abs() < 1e-12);
    }
}

#[test]
fn inverted_lists_are_equally_likely() {
    for n in 2..=6 {
        let model = MallowsModel::centered(n, 0.8).unwrap();
        for k in 1..=n {
            for t in enumerate_topk(n, k).unwrap() {
                if let Ok(inv) = invert_topk(&t) {
                    let (a, b) = (
                        model.log_topk_probability(&t).unwrap(),
                        model.log_topk_probability(&inv).unwrap(),
                    );
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}

fn frequencies(draws: &[TopKRanking]) -> HashMap<Vec<usize>, f64> {
    let mut out = HashMap::new();
    for d in draws {
        *out.entry(d.items().to_vec()).or_insert(0.0) += 1.0 / draws.len() as f64;
    }
    out
}

#[test]
fn uniform_sampler_frequencies() {
    let model = MallowsModel::centered(4, 0.0).unwrap();
    let draws = model
        .sample_topk(2, 100_000, &mut RandomSource::new(1))
        .unwrap();
    let freq = frequencies(&draws);
    assert_eq!(freq.len(), 12);
    for f in freq.values() {
        assert!((f - 1.0 / 12.0).abs() < 0.01);
    }
    let model = MallowsModel::centered(3, 1.0).unwrap();
    let draws = model
        .sample_topk(1, 100_000, &mut RandomSource::new(2))
        .unwrap();
    assert!((frequencies(&draws)[&vec![0]] - 0.665).abs() < 0.01);
}

#[test]
fn inverted_draws_follow_the_same_law() {
    // Restricted to draws whose values are a prefix of the items, where the
    // inverse is defined.
    let model = MallowsModel::centered(5, 0.5).unwrap();
    let draws = model
        .sample_topk(3, 200_000, &mut RandomSource::new(3))
        .unwrap();
    let kept: Vec<TopKRanking> = draws
        .into_iter()
        .filter(|d| invert_topk(d).is_ok())
        .collect();
    let inverted: Vec<TopKRanking> = kept.iter().map(|d| invert_topk(d).unwrap()).collect();
    let (a, b) = (frequencies(&kept), frequencies(&inverted));
    let tv: f64 = a
        .keys()
        .chain(b.keys())
        .collect::<std::collections::HashSet<_>>()
        .into_iter()
        .map(|key| (a.get(key).unwrap_or(&0.0) - b.get(key).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / 2.0;
    assert!(kept.len() > 10_000);
    assert!(tv < 0.01, "tv = {tv}");
}

#[test]
fn uniform_extensions_pass_chi_square() {
    let model = MallowsModel::centered(5, 0.0).unwrap();
    let sigma = TopKRanking::new(5, vec![3, 1]).unwrap();
    let mut rng = RandomSource::new(4);
    let mut counts: HashMap<Vec<usize>, f64> = HashMap::new();
    let draws = 100_000;
    for _ in 0..draws {
        let p = model.sample_linear_extension(&sigma, &mut rng).unwrap();
        *counts.entry(p.order()).or_insert(0.0) += 1.0;
    }
    assert_eq!(counts.len(), 6);
    let expected = draws as f64 / 6.0;
    let chi2: f64 = counts
        .values()
        .map(|c| (c - expected).powi(2) / expected)
        .sum();
    // 99.9% quantile of chi-square with 5 degrees of freedom.
    assert!(chi2 < 20.52, "chi2 = {chi2}");
}

#[test]
fn extension_law_matches_conditionals() {
    let sigma0 = Permutation::from_order(&[2, 0, 3, 1]).unwrap();
    let model = MallowsModel::new(sigma0.clone(), 1.0).unwrap();
    let sigma = TopKRanking::new(4, vec![0, 1]).unwrap();
    let exact = extension_conditionals(&sigma0, 1.0, &sigma).unwrap();
    let mut rng = RandomSource::new(5);
    let draws = 100_000;
    let mut counts: HashMap<Permutation, f64> = HashMap::new();
    for _ in 0..draws {
        let p = model.sample_linear_extension(&sigma, &mut rng).unwrap();
        assert_eq!(&p.order()[..2], sigma.items());
        *counts.entry(p).or_insert(0.0) += 1.0 / draws as f64;
    }
    let tv: f64 = exact
        .iter()
        .map(|(p, q)| (counts.get(p).unwrap_or(&0.0) - q).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.01, "tv = {tv}");
}

#[test]
fn pairwise_marginals_are_complementary() {
    let mut rng = RandomSource::new(6);
    let sigma0 = Permutation::new(rng.shuffled(6)).unwrap();
    let model = MallowsModel::new(sigma0, 0.6).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                let a = model.pairwise_marginal(i, j, &mut rng).unwrap().probability;
                let b = model.pairwise_marginal(j, i, &mut rng).unwrap().probability;
                assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }
    let uniform = MallowsModel::centered(4, 0.0).unwrap();
    assert!(
        (uniform
            .pairwise_marginal(0, 3, &mut rng)
            .unwrap()
            .probability
            - 0.5)
            .abs()
            < 1e-12
    );
}

#[test]
fn likelihood_peaks_at_the_mle() {
    let sigma0 = Permutation::from_order(&[4, 0, 3, 2, 1]).unwrap();
    let model = MallowsModel::new(sigma0.clone(), 1.2).unwrap();
    let sample = model
        .sample_topk(3, 2_000, &mut RandomSource::new(7))
        .unwrap();
    let fit = estimate_theta_mle(&sample, &sigma0).unwrap();
    let ll = |theta: f64| {
        MallowsModel::new(sigma0.clone(), theta)
            .unwrap()
            .log_likelihood(&sample)
            .unwrap()
    };
    let best = ll(fit.theta);
    for step in 1..=60 {
        let theta = 0.05 * step as f64;
        assert!(ll(theta) <= best + 1e-9, "theta = {theta}");
    }
    assert!(best >= ll(fit.theta + 0.05) && best >= ll(fit.theta - 0.05));
    let (a, b) = sample.split_at(700);
    let m = MallowsModel::new(sigma0, 0.9).unwrap();
    let whole = m.log_likelihood(&sample).unwrap();
    assert!((whole - m.log_likelihood(a).unwrap() - m.log_likelihood(b).unwrap()).abs() < 1e-8);
}
