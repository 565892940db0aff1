mod common;

use corrmfg::correlated::{check_optimality, dpp_solve, evaluate_j, Identity};
use corrmfg::measures::{dist_counts, from_counts};
use corrmfg::streams::RunStreams;
use corrmfg::toy::{build_game, build_rho, ToyParams};
use corrmfg::{dist, parse_q, q, FiniteDist, Scalar, Q};
use proptest::prelude::*;

fn rational_dist(raw: Vec<u32>) -> FiniteDist<Q> {
    let total: i64 = raw.iter().map(|&w| w as i64).sum();
    FiniteDist::new_unchecked(raw.into_iter().map(|w| q(w as i64, total)).collect())
}

fn weights(n: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..20, n).prop_filter("non-zero", |v| v.iter().any(|&w| w > 0))
}

proptest! {
    #[test]
    fn dist_is_a_bounded_metric((a, b, c) in (2usize..5).prop_flat_map(|n| (weights(n), weights(n), weights(n)))) {
        let (a, b, c) = (rational_dist(a), rational_dist(b), rational_dist(c));
        let ab = dist(&a, &b).unwrap();
        prop_assert_eq!(ab.clone(), dist(&b, &a).unwrap());
        prop_assert!(ab >= q(0, 1) && ab <= q(1, 1));
        prop_assert_eq!(dist(&a, &a).unwrap(), q(0, 1));
        prop_assert!(dist(&a, &c).unwrap() <= ab + dist(&b, &c).unwrap());
    }

    #[test]
    fn count_distance_matches_exact(counts in weights(3), m in weights(3)) {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        let exact = dist(&from_counts::<Q>(&counts, total), &rational_dist(m.clone())).unwrap();
        let fast = dist_counts(&counts, total, &rational_dist(m).to_f64());
        prop_assert!((exact.to_f64() - fast).abs() < 1e-12);
    }

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let v = q(n, d);
        prop_assert_eq!(parse_q(&v.render()).unwrap(), v);
    }

    #[test]
    fn single_uniform_matches_slot_fill(seed in any::<u64>(), run in 0u64..1000, slot in 0u64..50, lane in 0usize..6) {
        let mut s = RunStreams::new(seed, run, 6);
        let mut block = vec![0.0; 6];
        s.fill_slot(slot, &mut block);
        let mut fresh = RunStreams::new(seed, run, 6);
        prop_assert_eq!(fresh.uniform(slot, lane), block[lane]);
        prop_assert!((0.0..1.0).contains(&block[lane]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn value_never_exceeds_following(b in 1i64..50, c0 in 0i64..40, c1 in 0i64..40) {
        let p = ToyParams::new(q(b, 200), q(c0, 160), q(c1, 160)).unwrap();
        let (game, rho) = (build_game(&p).unwrap(), build_rho(&p).unwrap());
        let mut v = q(0, 1);
        for s in rho.active_strategies() {
            let table = dpp_solve(&game, &rho, s).unwrap();
            prop_assert!(table.reverify(&game, &rho).unwrap());
            v += rho.strategy_mass(s) * table.initial_value(&game);
        }
        let j = evaluate_j(&game, &rho, &Identity).unwrap();
        prop_assert!(v <= j);
        let opt = check_optimality(&game, &rho).unwrap();
        prop_assert_eq!(opt.passed, v == j);
    }

    #[test]
    fn dpp_matches_exhaustive_search(b in 1i64..50, c0 in 0i64..40, c1 in 0i64..40) {
        let (beta, c0, c1) = (q(b, 200), q(c0, 160), q(c1, 160));
        let p = ToyParams::new(beta.clone(), c0.clone(), c1.clone()).unwrap();
        let (game, rho) = (build_game(&p).unwrap(), build_rho(&p).unwrap());
        let oracle = common::ToyOracle::new(beta, c0, c1);
        let s = *rho.active_strategies().first().unwrap();
        let (min, _) = common::BranchEnumeration::new(&rho, s).min_and_follow(&oracle, &rho, s);
        prop_assert_eq!(dpp_solve(&game, &rho, s).unwrap().initial_value(&game), min);
    }
}
