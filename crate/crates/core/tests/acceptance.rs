//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use corrmfg::chaos::{chaos_curve, slope_fit};
use corrmfg::correlated::{
    check_consistency, check_optimality, check_r2, dpp_solve, evaluate_j, validate_r1, Identity, SuggestionAtoms,
};
use corrmfg::nplayer::{best_response_bruteforce, default_family, epsilon_report, exact_j1n, simulate};
use corrmfg::toy::{build_game, build_rho, build_rho_weights, window_scan, ToyParams, ToyStrategy, ToyWeights, PLUS};
use corrmfg::{q, GameSpec, Scalar as _, Q};
use num_traits::Zero;
use rand::{Rng, SeedableRng};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn toy(beta: &Q, c0: &Q, c1: &Q) -> (GameSpec<Q>, SuggestionAtoms<Q>) {
    let p = ToyParams::new(beta.clone(), c0.clone(), c1.clone()).unwrap();
    (build_game(&p).unwrap(), build_rho(&p).unwrap())
}

fn interior() -> (Q, Q) {
    window_scan(&q(1, 5), 16).unwrap().interior().expect("non-empty window")
}

fn criterion_1() -> Check {
    let beta = q(1, 5);
    let (c0, c1) = interior();
    let start = Instant::now();
    let (game, rho) = toy(&beta, &c0, &c1);
    let pass = validate_r1(&game, &rho).passed
        && check_r2(&rho).passed
        && check_consistency(&game, &rho).unwrap().passed
        && check_optimality(&game, &rho).unwrap().passed;
    let elapsed = start.elapsed();
    ensure(pass, format!("verification fails at ({c0}, {c1})"))?;
    ensure(elapsed < Duration::from_secs(1), format!("verification took {elapsed:?}"))?;
    ensure(common::oracle_point(&beta, &c0, &c1) == (true, true), "oracle disagrees at the interior point")?;

    let (game, rho) = toy(&beta, &c0, &<Q as Zero>::zero());
    let opt = check_optimality(&game, &rho).unwrap();
    let witnesses: usize = opt.branches.iter().map(|b| b.witnesses.len()).sum();
    ensure(!opt.passed && witnesses > 0, "c1 = 0 control passes")?;

    let p = ToyParams::new(beta.clone(), c0.clone(), c1.clone()).unwrap();
    let perturbed = build_rho_weights(&ToyWeights::symmetric(&beta), Some(&q(1, 100))).unwrap();
    let con = check_consistency(&build_game(&p).unwrap(), &perturbed).unwrap();
    ensure(!con.passed && !con.failures.is_empty(), "perturbed m1+ control passes")?;
    Ok(format!(
        "interior ({c0}, {c1}) verified in {elapsed:.2?}; c1=0 gives {witnesses} witnesses; perturbation gives {} (Con) failures",
        con.failures.len()
    ))
}

fn criterion_2() -> Check {
    let mut checked = 0;
    for beta in [q(1, 5), q(1, 8), q(1, 20), q(6, 25), q(1, 100)] {
        for i in 0..=6 {
            for j in 0..=6 {
                // c0 over [0, 3β/4] straddles the tie at β/2
                let c0 = beta.clone() * q(i, 8);
                let c1 = beta.clone() * q(5, 16) * (q(1, 1) + q(j, 6));
                let (game, rho) = toy(&beta, &c0, &c1);
                let phi0 = rho.strategy_index(&ToyStrategy::Phi0.strategy()).unwrap();
                let hat = rho.strategy_index(&ToyStrategy::PhiHatPlus.strategy()).unwrap();
                let v0 = dpp_solve(&game, &rho, phi0).unwrap();
                let vh = dpp_solve(&game, &rho, hat).unwrap();
                let min0 = if c0 < <Q as Zero>::zero() { c0.clone() } else { <Q as Zero>::zero() };
                for x in 0..2 {
                    ensure(v0.get(0, &[x], 0).unwrap().value == min0, format!("V_phi0 at β={beta} c0={c0} c1={c1}"))?;
                }
                let d = c0.clone() - beta.clone() * q(1, 2);
                let minh = if d < <Q as Zero>::zero() { d } else { <Q as Zero>::zero() };
                ensure(
                    vh.get(0, &[PLUS], 0).unwrap().value == minh,
                    format!("V_hat+ at β={beta} c0={c0} c1={c1}"),
                )?;
                checked += 1;
            }
        }
    }
    let scan = window_scan(&q(1, 5), 16).unwrap();
    ensure(scan.refined.is_some(), "window scan found no passing region")?;
    Ok(format!(
        "{checked} parameter points exact; window summary lists {} discrepancies with the stated window",
        scan.discrepancies.len()
    ))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let beta = q(1, 5);
    let (c0, c1) = interior();
    let (game, rho) = toy(&beta, &c0, &c1);
    let oracle = common::ToyOracle::new(beta, c0, c1);
    let mut branches = 0;
    for s in rho.active_strategies() {
        let (min, _) = common::BranchEnumeration::new(&rho, s).min_and_follow(&oracle, &rho, s);
        let v = dpp_solve(&game, &rho, s).unwrap().initial_value(&game);
        ensure(v == min, format!("strategy {s}: DPP {v} vs brute force {min}"))?;
        branches += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("{branches} branches match exhaustive search in {elapsed:.2?}"))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let beta = q(1, 5);
    let (c0, c1) = interior();
    let (game, rho) = toy(&beta, &c0, &c1);
    let (g, r) = (game.to_f64(), rho.to_f64());
    let mut parts = Vec::new();
    for n in [2, 3] {
        let exact = exact_j1n(&game, &rho, n, None).unwrap().to_f64();
        let covered = (1..=100u64)
            .filter(|&seed| simulate(&g, &r, n, None, 200_000, seed).unwrap().cost.covers(exact, 3.0))
            .count();
        ensure(covered >= 99, format!("N={n}: {covered}/100 trials within 3σ"))?;
        parts.push(format!("N={n}: {covered}/100"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!("{} within 3σ of exact J_1^N, {elapsed:.1?}", parts.join(", ")))
}

fn criterion_5() -> Check {
    let beta = q(1, 5);
    let (c0, c1) = interior();
    let (game, rho) = toy(&beta, &c0, &c1);
    let (g, r) = (game.to_f64(), rho.to_f64());
    let j = evaluate_j(&game, &rho, &Identity).unwrap().to_f64();
    let sim = simulate(&g, &r, 500, None, 100_000, 2024).unwrap();
    ensure(
        sim.cost.covers(j, 3.0),
        format!("N=500: {} ± {} vs J = {j}", sim.cost.mean, sim.cost.stderr),
    )?;

    let family = default_family(2);
    let report = epsilon_report(&g, &r, &[5, 10, 20, 50, 100], &family, 100_000, 77).unwrap();
    let s5 = report.summary_for(5).unwrap();
    let s100 = report.summary_for(100).unwrap();
    let gap = s5.improvement - s100.improvement;
    let sd = (s5.improvement_stderr.powi(2) + s100.improvement_stderr.powi(2)).sqrt();
    ensure(
        gap > 3.0 * sd,
        format!("improvement N=5 {} vs N=100 {} (3σ = {})", s5.improvement, s100.improvement, 3.0 * sd),
    )?;

    let br = best_response_bruteforce(&game, &rho, 2).unwrap();
    let identity = exact_j1n(&game, &rho, 2, None).unwrap();
    let best_family = family
        .iter()
        .map(|rule| identity.clone() - exact_j1n(&game, &rho, 2, Some(rule.as_ref())).unwrap())
        .max()
        .unwrap();
    ensure(best_family <= br.exact.2, format!("family improvement {best_family} exceeds ε_2 = {}", br.epsilon))?;
    Ok(format!(
        "N=500 {:.5} ± {:.5} vs J {j:.5}; improvement N=5 {:.5} ± {:.5}, N=100 {:.5} ± {:.5}; N=2 family {} ≤ ε_2 {}",
        sim.cost.mean,
        sim.cost.stderr,
        s5.improvement,
        s5.improvement_stderr,
        s100.improvement,
        s100.improvement_stderr,
        best_family,
        br.epsilon
    ))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let beta = q(1, 5);
    let (c0, c1) = interior();
    let (game, rho) = toy(&beta, &c0, &c1);
    let (g, r) = (game.to_f64(), rho.to_f64());
    let curve = chaos_curve(&g, &r, &[10, 100, 1000], 10_000, 31, None).unwrap();
    for w in curve.rows.windows(2) {
        let sd = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        ensure(
            w[1].estimate <= w[0].estimate + 3.0 * sd,
            format!("N={} -> N={} increases", w[0].n, w[1].n),
        )?;
    }
    let slope = slope_fit(&curve).unwrap();
    ensure((-0.7..=-0.3).contains(&slope), format!("slope {slope}"))?;
    let big = chaos_curve(&g, &r, &[10_000], 500, 32, None).unwrap();
    let e = big.rows[0].estimate;
    ensure(e <= 0.05, format!("N=10^4 estimate {e}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("slope {slope:.3}; N=10^4 estimate {e:.4}; {elapsed:.1?}"))
}

fn criterion_7() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let beta = q(rng.random_range(1..250), 1000);
        let c0 = beta.clone() * q(1, 4);
        let c1 = beta.clone() * q(15, 32);
        let (game, rho) = toy(&beta, &c0, &c1);
        ensure(validate_r1(&game, &rho).passed, format!("(R1) fails at β={beta}"))?;
        ensure(check_r2(&rho).passed, format!("(R2) fails at β={beta}"))?;
    }
    let w = ToyWeights {
        b1: q(1, 5),
        b2: q(1, 20),
        b3: q(1, 10),
        b4: q(3, 20),
    };
    let r2 = check_r2(&build_rho_weights(&w, None).unwrap());
    ensure(!r2.passed, "asymmetric reweighting passes (R2)")?;
    Ok(format!("20 sampled β pass; asymmetric weights give {} (R2) failures", r2.failures.len()))
}

fn csv_bytes<T: serde::Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).unwrap();
    }
    w.into_inner().unwrap()
}

fn criterion_8() -> Check {
    let run = || {
        let beta = q(1, 5);
        let (c0, c1) = interior();
        let (game, rho) = toy(&beta, &c0, &c1);
        let (g, r) = (game.to_f64(), rho.to_f64());
        let dpp: Vec<(usize, usize, String, bool)> = rho
            .active_strategies()
            .into_iter()
            .flat_map(|s| {
                let t = dpp_solve(&game, &rho, s).unwrap();
                t.entries
                    .iter()
                    .map(|((tt, _, n), e)| (s * 100 + tt, *n, e.value.render(), e.tie))
                    .collect::<Vec<_>>()
            })
            .collect();
        let scan = window_scan(&beta, 8).unwrap();
        let points: Vec<(String, String, bool, bool)> = scan
            .points
            .iter()
            .map(|p| (p.c0.render(), p.c1.render(), p.consistency_pass, p.optimality_pass))
            .collect();
        let eps = epsilon_report(&g, &r, &[5, 10], &default_family(2), 2_000, 5).unwrap();
        let chaos = chaos_curve(&g, &r, &[10, 100], 1_000, 5, None).unwrap();
        [csv_bytes(&dpp), csv_bytes(&points), csv_bytes(&eps.rows), csv_bytes(&chaos.rows)]
    };
    let (a, b) = (run(), run());
    ensure(a == b, "outputs differ between identical runs")?;
    Ok(format!("{} output tables byte-identical across runs", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("toy verification", criterion_1),
        ("DPP closed forms", criterion_2),
        ("oracle equivalence", criterion_3),
        ("Monte Carlo correctness", criterion_4),
        ("N-player limit and defect", criterion_5),
        ("chaos rate", criterion_6),
        ("structure checks", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
