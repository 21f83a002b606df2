use mallows_topk::estimation::borda_scores;
use mallows_topk::oracle::{
    delta_ik_oracle, delta_row, enumerate_topk, exact_expectations, exhaustive_kemeny,
    permutation_orders, position_marginals,
};
use mallows_topk::{
    approx_mean_distances, borda, borda_sample_complexity, delta_1k, empirical_pair_accuracy,
    estimate_theta_mle, kendall_full, mean_distances, partial_estimate_error, separate,
    ConsensusEstimate, Error, MallowsModel, Permutation, RandomSource, SplitMethod, TopKRanking,
};
use proptest::prelude::*;

#[test]
fn delta_matches_enumeration() {
    for n in 2..=7 {
        for &theta in &[0.1, 0.5, 1.0, 2.0] {
            let marginals = position_marginals(n, theta).unwrap();
            for k in 1..=n {
                let oracle = delta_row(&marginals, k)[0];
                assert!(
                    (delta_1k(n, k, theta).unwrap() - oracle).abs() < 1e-12,
                    "n={n} k={k}"
                );
            }
        }
    }
    assert!((delta_ik_oracle(5, 3, 1, 0.5).unwrap() - 0.089_560_062_2).abs() < 1e-9);
    assert!((delta_1k(8, 3, 1.0).unwrap() - 0.080_842_112_179_358_84).abs() < 1e-12);
}

#[test]
fn delta_symmetry_pairs_i_with_n_minus_i() {
    for n in [5, 6] {
        for &theta in &[0.3, 1.0, 2.5] {
            let m = position_marginals(n, theta).unwrap();
            for k in 1..n {
                let row = delta_row(&m, k);
                let mirror = delta_row(&m, n - k);
                for i in 1..n {
                    assert!((row[i - 1] - mirror[n - i - 1]).abs() < 1e-12);
                }
            }
        }
    }
    // The index shifted by one more does not pair up.
    let m = position_marginals(5, 1.0).unwrap();
    let (a, b) = (delta_row(&m, 2)[0], delta_row(&m, 3)[2]);
    assert!((a - b).abs() > 1e-3);
}

#[test]
fn delta_is_smallest_at_the_first_pair_for_large_k() {
    for n in [5, 6] {
        for &theta in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let m = position_marginals(n, theta).unwrap();
            for k in n.div_ceil(2)..=n {
                let row = delta_row(&m, k);
                let first = delta_1k(n, k, theta).unwrap();
                assert!(
                    row.iter().all(|&d| d >= first - 1e-12),
                    "n={n} k={k} {theta}"
                );
            }
        }
    }
}

#[test]
fn delta_is_nonnegative_and_decreasing_only_for_top1() {
    let m = position_marginals(5, 1.0).unwrap();
    for k in 1..=5 {
        assert!(delta_row(&m, k).iter().all(|&d| d >= -1e-15));
    }
    let top1 = delta_row(&m, 1);
    assert!(top1.windows(2).all(|w| w[0] >= w[1]));
    let top3 = delta_row(&m, 3);
    assert!(top3[0] < top3[1]);
}

#[test]
fn borda_bound_fixtures_and_monotonicity() {
    let b = borda_sample_complexity(8, 3, 1.0, 1, 0.05).unwrap();
    assert_eq!(b.m, 32);
    assert!((b.denominator - 3.516_552_287_243_025_7).abs() < 1e-12);
    assert_eq!(borda_sample_complexity(8, 3, 1.0, 1, 0.1).unwrap().m, 24);
    assert_eq!(borda_sample_complexity(8, 3, 1.0, 2, 0.1).unwrap().m, 25);
    let ms: Vec<u64> = (1..10)
        .map(|i| borda_sample_complexity(10, 4, 1.0, i, 0.1).unwrap().m)
        .collect();
    assert!(ms.windows(2).all(|w| w[0] <= w[1]), "{ms:?}");
    assert!(ms[8] > ms[0]);
    assert!(
        borda_sample_complexity(10, 4, 1.0, 1, 0.01).unwrap().m
            > borda_sample_complexity(10, 4, 1.0, 1, 0.05).unwrap().m
    );
    assert!(borda_sample_complexity(10, 4, 1.0, 1, 0.999_999).unwrap().m <= 1);
    assert!(matches!(
        borda_sample_complexity(8, 1, 0.05, 7, 0.1),
        Err(Error::VacuousBound(_))
    ));
}

#[test]
fn pair_accuracy_grows_with_sample_size() {
    let rng = RandomSource::new(11);
    let trials = 500;
    let acc: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&m| empirical_pair_accuracy(8, 3, 0.5, 1, m, trials, &rng).unwrap())
        .collect();
    for w in acc.windows(2) {
        let se = ((w[0] * (1.0 - w[0]) + w[1] * (1.0 - w[1])) / trials as f64).sqrt();
        assert!(w[1] >= w[0] - 2.0 * se, "{acc:?}");
    }
    assert_eq!(
        empirical_pair_accuracy(6, 2, 40.0, 1, 1, 50, &rng).unwrap(),
        1.0
    );
}

#[test]
fn borda_recovers_the_centre_from_many_full_rankings() {
    let mut hits = 0;
    for seed in 0..10 {
        let mut rng = RandomSource::new(100 + seed);
        let sigma0 = Permutation::new(rng.shuffled(8)).unwrap();
        let model = MallowsModel::new(sigma0.clone(), 0.5).unwrap();
        let sample = model.sample_topk(8, 10_000, &mut rng).unwrap();
        hits += usize::from(borda(&sample).unwrap() == sigma0);
    }
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn kemeny_agrees_with_borda_on_small_samples() {
    let mut agree = 0;
    for seed in 0..10 {
        let mut rng = RandomSource::new(200 + seed);
        let sigma0 = Permutation::new(rng.shuffled(4)).unwrap();
        let sample = MallowsModel::new(sigma0, 1.0)
            .unwrap()
            .sample_topk(4, 15, &mut rng)
            .unwrap();
        agree += usize::from(exhaustive_kemeny(&sample).unwrap() == borda(&sample).unwrap());
    }
    assert!(agree >= 8, "{agree}/10");
}

#[test]
fn partial_error_spans_the_extensions() {
    for n in 1..=6 {
        let sigma0 = Permutation::new(RandomSource::new(n as u64).shuffled(n)).unwrap();
        for k in 0..=n {
            let prefixes = if k == 0 {
                vec![vec![]]
            } else {
                enumerate_topk(n, k)
                    .unwrap()
                    .iter()
                    .map(|t| t.items().to_vec())
                    .collect()
            };
            for prefix in prefixes {
                let est = ConsensusEstimate {
                    n,
                    order: prefix.clone(),
                    source_counts: vec![0; n],
                    expert_prefix: k,
                    experts: vec![],
                    fallback: false,
                };
                let err = partial_estimate_error(&est, &sigma0).unwrap();
                let dists: Vec<u64> = permutation_orders(n)
                    .unwrap()
                    .into_iter()
                    .filter(|o| o[..k] == prefix[..])
                    .map(|o| kendall_full(&Permutation::from_order(&o).unwrap(), &sigma0).unwrap())
                    .collect();
                assert_eq!(err.d_min, *dists.iter().min().unwrap());
                assert_eq!(err.d_max, *dists.iter().max().unwrap());
            }
        }
    }
}

#[test]
fn mle_recovers_theta() {
    let sigma0 = Permutation::from_order(&[4, 0, 3, 2, 1]).unwrap();
    let model = MallowsModel::new(sigma0.clone(), 1.43).unwrap();
    let sample = model
        .sample_topk(5, 100_000, &mut RandomSource::new(9))
        .unwrap();
    let fit = estimate_theta_mle(&sample, &sigma0).unwrap();
    assert!((1.33..=1.53).contains(&fit.theta), "{}", fit.theta);
}

#[test]
fn exact_expectations_fixture() {
    let x = exact_expectations(5, 3, 2.0, 0.3).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(x.full.gamma_center, 0.460_528_882_520_050_4));
    assert!(close(x.full.beta_center, 3.359_398_862_597_559));
    assert!(close(x.prefix.gamma_center, 0.442_547_267_998_209_54));
    assert!(close(x.prefix.beta_center, 3.025_508_973_851_735_6));
    assert!(close(x.full.gamma_gamma, 0.793_639_991_558_444_6));
    assert!(close(x.full.beta_beta, 3.759_002_607_537_073));
    assert!(close(x.full.beta_gamma, 3.101_129_798_877_550_6));
    // Against the full centre the lower end of the sandwich already fails here.
    assert!(x.full.beta_center > x.full.beta_gamma);
    assert!(x.prefix.beta_center <= x.prefix.beta_gamma);
}

#[test]
fn full_centre_counterexample() {
    // n = 3, k = 1, uniform: a single listed item is at distance 1 from the
    // full centre on average but only 2/3 from another draw.
    let x = exact_expectations(3, 1, 0.0, 0.0).unwrap();
    assert!((x.full.gamma_center - 1.0).abs() < 1e-12);
    assert!((x.full.gamma_gamma - 2.0 / 3.0).abs() < 1e-12);
    assert!(x.prefix.gamma_center <= x.prefix.gamma_gamma);
}

#[test]
fn sandwich_bounds_on_small_grid() {
    let thetas = [0.0, 0.3, 1.0, 2.5];
    for n in 2..=5 {
        for k in 1..=n {
            for (a, &tg) in thetas.iter().enumerate() {
                for &tb in &thetas[..a] {
                    let e = exact_expectations(n, k, tg, tb).unwrap().prefix;
                    let tol = 1e-12;
                    for (center, pair) in [
                        (e.gamma_center, e.gamma_gamma),
                        (e.beta_center, e.beta_beta),
                    ] {
                        assert!(0.5 * pair <= center + tol && center <= pair + tol);
                    }
                    assert!(e.beta_center <= e.beta_gamma + tol);
                    assert!(e.beta_gamma <= e.beta_beta + tol);
                }
            }
        }
    }
}

#[test]
fn sampled_mean_distances_meet_their_target() {
    let model = MallowsModel::centered(10, 0.3).unwrap();
    let sample = model
        .sample_topk(10, 400, &mut RandomSource::new(12))
        .unwrap();
    let exact = mean_distances(&sample).unwrap();
    let approx = approx_mean_distances(&sample, 5.0, 0.2, &RandomSource::new(13)).unwrap();
    let covered = exact
        .iter()
        .zip(&approx)
        .filter(|(a, b)| (*a - *b).abs() <= 5.0)
        .count();
    assert!(covered as f64 / sample.len() as f64 >= 0.8);
    assert_ne!(exact, approx);
}

fn arb_sample() -> impl Strategy<Value = (usize, Vec<TopKRanking>)> {
    (2usize..=7).prop_flat_map(|n| {
        let list = (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..=n)
            .prop_map(move |(o, k)| TopKRanking::new(n, o[..k].to_vec()).unwrap());
        (Just(n), prop::collection::vec(list, 2..12))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn borda_ignores_sample_order((_n, sample) in arb_sample(), seed in any::<u64>()) {
        let mut shuffled = sample.clone();
        let idx = RandomSource::new(seed).shuffled(sample.len());
        for (dst, &src) in idx.iter().enumerate() {
            shuffled[dst] = sample[src].clone();
        }
        prop_assert_eq!(borda(&sample).unwrap(), borda(&shuffled).unwrap());

        let a = separate(&sample, SplitMethod::TwoMeans).unwrap();
        let b = separate(&shuffled, SplitMethod::TwoMeans).unwrap();
        for (dst, &src) in idx.iter().enumerate() {
            prop_assert_eq!(b.labels[dst], a.labels[src]);
            prop_assert_eq!(b.deltas[dst], a.deltas[src]);
        }
        prop_assert_eq!(a, separate(&sample, SplitMethod::TwoMeans).unwrap());
    }

    #[test]
    fn borda_follows_item_relabelling((n, sample) in arb_sample(), seed in any::<u64>()) {
        let scores = borda_scores(&sample).unwrap();
        let mut sorted = scores.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assume!(sorted.len() == n);
        let pi = RandomSource::new(seed).shuffled(n);
        let relabelled: Vec<TopKRanking> = sample
            .iter()
            .map(|s| TopKRanking::new(n, s.items().iter().map(|&x| pi[x]).collect()).unwrap())
            .collect();
        let expected: Vec<usize> = borda(&sample).unwrap().order().iter().map(|&x| pi[x]).collect();
        prop_assert_eq!(borda(&relabelled).unwrap().order(), expected);
    }

    #[test]
    fn mle_is_a_likelihood_maximum(seed in any::<u64>(), theta in 0.2f64..3.0, k in 1usize..=5) {
        let mut rng = RandomSource::new(seed);
        let sigma0 = Permutation::new(rng.shuffled(5)).unwrap();
        let sample = MallowsModel::new(sigma0.clone(), theta).unwrap().sample_topk(k, 300, &mut rng).unwrap();
        let fit = estimate_theta_mle(&sample, &sigma0).unwrap();
        prop_assume!(fit.clamp.is_none());
        let ll = |t: f64| MallowsModel::new(sigma0.clone(), t).unwrap().log_likelihood(&sample).unwrap();
        let best = ll(fit.theta);
        prop_assert!(best + 1e-9 >= ll(fit.theta + 0.05));
        prop_assert!(best + 1e-9 >= ll((fit.theta - 0.05).max(0.0)));
    }
}
