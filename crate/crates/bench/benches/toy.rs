use criterion::{black_box, criterion_group, criterion_main, Criterion};
use corrmfg::correlated::{check_optimality, dpp_solve};
use corrmfg::nplayer::{simulate, FollowSuggestion};
use corrmfg::q;
use corrmfg::toy::{build_game, build_rho, ToyParams};

fn toy(c: &mut Criterion) {
    let p = ToyParams::new(q(1, 5), q(1, 20), q(3, 32)).unwrap();
    let game = build_game(&p).unwrap();
    let rho = build_rho(&p).unwrap();
    c.bench_function("dpp_solve/phi0", |b| b.iter(|| dpp_solve(black_box(&game), &rho, 0).unwrap()));
    c.bench_function("check_optimality", |b| b.iter(|| check_optimality(black_box(&game), &rho).unwrap()));
    let (g, r) = (game.to_f64(), rho.to_f64());
    c.bench_function("simulate/N=10/1000reps", |b| {
        b.iter(|| simulate(black_box(&g), &r, 10, Some(&FollowSuggestion), 1000, 1).unwrap())
    });
}

criterion_group!(benches, toy);
criterion_main!(benches);
