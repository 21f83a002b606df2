use mallows_topk::oracle::{brute_topk_distance, enumerate_topk, permutation_orders};
use mallows_topk::rankings::decode_naive;
use mallows_topk::{
    distance_to_full, invert_topk, kendall_full, kendall_topk, InversionVector, Permutation,
    TopKRanking,
};
use proptest::prelude::*;

fn perm(order: &[usize]) -> Permutation {
    Permutation::from_order(order).unwrap()
}

fn brute_full(a: &Permutation, b: &Permutation) -> u64 {
    let n = a.n();
    let mut d = 0;
    for i in 0..n {
        for j in i + 1..n {
            if (a.rank(i) < a.rank(j)) != (b.rank(i) < b.rank(j)) {
                d += 1;
            }
        }
    }
    d
}

fn arb_permutation(max_n: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_n)
        .prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|order| perm(&order))
}

fn arb_topk(max_n: usize) -> impl Strategy<Value = TopKRanking> {
    (1..=max_n)
        .prop_flat_map(|n| (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..=n))
        .prop_map(|(order, k)| TopKRanking::new(order.len(), order[..k].to_vec()).unwrap())
}

#[test]
fn bijection_is_exhaustive_on_small_n() {
    for n in 1..=6 {
        for order in permutation_orders(n).unwrap() {
            let p = perm(&order);
            let v = p.inversion_vector();
            assert_eq!(Permutation::from_inversion_vector(&v).unwrap(), p);
            assert_eq!(
                v.total(),
                kendall_full(&p, &Permutation::identity(n)).unwrap()
            );
        }
        for k in 1..=n {
            for t in enumerate_topk(n, k).unwrap() {
                let v = t.inversion_vector();
                assert_eq!(TopKRanking::from_inversion_vector(&v).unwrap(), t);
                assert_eq!(decode_naive(&v), t.items());
            }
        }
    }
}

#[test]
fn right_invariance_and_full_lists_exhaustive() {
    for n in 1..=5 {
        let perms: Vec<Permutation> = permutation_orders(n)
            .unwrap()
            .iter()
            .map(|o| perm(o))
            .collect();
        let e = Permutation::identity(n);
        for s in &perms {
            for p in &perms {
                let d = kendall_full(s, p).unwrap();
                assert_eq!(d, brute_full(s, p));
                assert_eq!(
                    d,
                    kendall_full(&s.compose(&p.inverse()).unwrap(), &e).unwrap()
                );
                assert_eq!(d, kendall_topk(&s.to_topk(), &p.to_topk()).unwrap());
            }
        }
    }
}

#[test]
fn topk_distance_to_identity_is_the_vector_sum() {
    for n in 1..=6 {
        let e = Permutation::identity(n);
        for k in 1..=n {
            for t in enumerate_topk(n, k).unwrap() {
                let d = t.inversion_vector().total();
                assert_eq!(d, brute_topk_distance(&t, &e.to_topk()));
                assert_eq!(d, distance_to_full(&t, &e).unwrap());
            }
        }
    }
}

#[test]
fn inversion_preserves_distance_exhaustive() {
    for n in 1..=6 {
        let e = Permutation::identity(n).to_topk();
        for k in 1..=n {
            for t in enumerate_topk(n, k).unwrap() {
                match invert_topk(&t) {
                    Ok(inv) => {
                        assert_eq!(invert_topk(&inv).unwrap(), t);
                        assert_eq!(
                            kendall_topk(&inv, &e).unwrap(),
                            kendall_topk(&t, &e).unwrap()
                        );
                    }
                    Err(_) => assert!(t.items().iter().any(|&x| x >= k)),
                }
            }
        }
    }
}

#[test]
fn small_fixtures() {
    let a = TopKRanking::new(3, vec![0]).unwrap();
    let b = TopKRanking::new(3, vec![1]).unwrap();
    assert_eq!(kendall_topk(&a, &b).unwrap(), 1);
    let p = Permutation::new(vec![1, 2, 0]).unwrap();
    assert_eq!(p.inversion_vector().entries(), &[1, 1]);
    let v = InversionVector::new(3, vec![1, 1]).unwrap();
    assert_eq!(Permutation::from_inversion_vector(&v).unwrap(), p);
    assert_eq!(
        Permutation::reversed(4).inversion_vector().entries(),
        &[3, 2, 1]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn full_round_trip(p in arb_permutation(100)) {
        let v = p.inversion_vector();
        prop_assert_eq!(Permutation::from_inversion_vector(&v).unwrap(), p.clone());
        prop_assert_eq!(v.total(), kendall_full(&p, &Permutation::identity(p.n())).unwrap());
    }

    #[test]
    fn partial_round_trip(t in arb_topk(100)) {
        let v = t.inversion_vector();
        prop_assert_eq!(v.k(), t.k());
        prop_assert_eq!(decode_naive(&v), t.items().to_vec());
        prop_assert_eq!(TopKRanking::from_inversion_vector(&v).unwrap(), t);
    }

    #[test]
    fn topk_distance_matches_pair_count(a in arb_topk(12), seed in any::<u64>()) {
        let n = a.n();
        let mut rng = mallows_topk::RandomSource::new(seed);
        let order = rng.shuffled(n);
        let k = 1 + rng.below(n);
        let b = TopKRanking::new(n, order[..k].to_vec()).unwrap();
        prop_assert_eq!(kendall_topk(&a, &b).unwrap(), brute_topk_distance(&a, &b));
        prop_assert_eq!(kendall_topk(&a, &b).unwrap(), kendall_topk(&b, &a).unwrap());
    }

    #[test]
    fn distance_to_full_is_relabelled_vector_sum(t in arb_topk(40), seed in any::<u64>()) {
        let mut rng = mallows_topk::RandomSource::new(seed);
        let sigma0 = perm(&rng.shuffled(t.n()));
        let relabelled: Vec<usize> = t.items().iter().map(|&x| sigma0.rank(x)).collect();
        let r = TopKRanking::new(t.n(), relabelled).unwrap();
        prop_assert_eq!(distance_to_full(&t, &sigma0).unwrap(), r.inversion_vector().total());
        prop_assert_eq!(
            distance_to_full(&t, &sigma0).unwrap(),
            kendall_topk(&t, &sigma0.to_topk()).unwrap()
        );
    }
}
