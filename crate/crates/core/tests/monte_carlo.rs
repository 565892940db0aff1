mod common;

use common::{BranchEnumeration, ToyOracle};
use corrmfg::chaos::chaos_curve;
use corrmfg::correlated::{evaluate_j, mc_policy_cost, DeterministicPolicy, DeviationQuery, Identity, UniformRandomPolicy};
use corrmfg::toy::{build_game, build_rho, ToyParams};
use corrmfg::{q, Scalar, Q};

fn params() -> ToyParams {
    ToyParams::new(q(1, 5), q(1, 20), q(3, 32)).unwrap()
}

#[test]
fn following_estimate_covers_exact_cost() {
    let p = params();
    let (game, rho) = (build_game(&p).unwrap(), build_rho(&p).unwrap());
    let j = evaluate_j(&game, &rho, &Identity).unwrap().to_f64();
    let est = mc_policy_cost(&game.to_f64(), &rho.to_f64(), &DeterministicPolicy(Identity), 100_000, 4).unwrap();
    assert!(est.covers(j, 4.0), "{est:?} vs {j}");
}

#[test]
fn always_push_estimate_covers_exact_cost() {
    let p = params();
    let (game, rho) = (build_game(&p).unwrap(), build_rho(&p).unwrap());
    let push = |_: &DeviationQuery<'_>| Some(1);
    let j = evaluate_j(&game, &rho, &push).unwrap().to_f64();
    let est = mc_policy_cost(&game.to_f64(), &rho.to_f64(), &DeterministicPolicy(push), 100_000, 5).unwrap();
    assert!(est.covers(j, 4.0), "{est:?} vs {j}");
}

#[test]
fn uniform_policy_estimate_covers_average_over_tables() {
    // each decision node is met at most once along a path, so independent
    // coin flips have the law of a uniformly drawn deviation table
    let p = params();
    let (game, rho) = (build_game(&p).unwrap(), build_rho(&p).unwrap());
    let oracle = ToyOracle::new(p.beta.clone(), p.c0.clone(), p.c1.clone());
    let mut exact = q(0, 1);
    for s in rho.active_strategies() {
        let e = BranchEnumeration::new(&rho, s);
        let k = e.nodes.len();
        let mut sum = q(0, 1);
        for mask in 0..(1usize << k) {
            sum += e.cost(&oracle, &rho, &|i| (mask >> i) & 1);
        }
        exact += rho.strategy_mass(s) * sum / Q::from_integer((1i64 << k).into());
    }
    let est = mc_policy_cost(&game.to_f64(), &rho.to_f64(), &UniformRandomPolicy { num_actions: 2 }, 100_000, 6).unwrap();
    assert!(est.covers(exact.to_f64(), 4.0), "{est:?} vs {exact}");
}

#[test]
fn chaos_curve_shrinks_and_conditions_on_atoms() {
    let p = params();
    let (g, r) = (build_game(&p).unwrap().to_f64(), build_rho(&p).unwrap().to_f64());
    let c = chaos_curve(&g, &r, &[10, 1000], 2_000, 1, Some(0)).unwrap();
    assert!(c.rows[1].estimate < c.rows[0].estimate);
    assert!(c.rows.iter().all(|row| row.flow_atom == Some(0)));
    assert!(chaos_curve(&g, &r, &[100, 10], 10, 1, None).is_err());
}
