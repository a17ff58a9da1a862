use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stopgame::fuzz::{random_game, random_strategy, GameParams};
use stopgame::oracle::pure_gap;
use stopgame::{best_response, game_value, gamma_mixed, GameSpec, Player, ScenarioTree};

fn uniform_game(depth: usize, branching: usize) -> GameSpec {
    let grid: Vec<f64> = (0..=depth).map(|t| t as f64).collect();
    let tree = ScenarioTree::uniform(&grid, branching).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(depth as u64 * 31 + branching as u64);
    let payoffs = (0..tree.len()).map(|_| stopgame::fuzz::random_payoff(&mut rng, 5, stopgame::fuzz::PayoffShape::Any)).collect();
    GameSpec::new(tree, payoffs).unwrap()
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("game_value");
    for (depth, branching) in [(4, 3), (6, 3), (10, 2)] {
        let g = uniform_game(depth, branching);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{}n", g.tree().len())), &g, |b, g| {
            b.iter(|| game_value(black_box(g), 1e-6, 0.25).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = uniform_game(6, 3);
    let phi = random_strategy(&mut rng, g.tree());
    let psi = random_strategy(&mut rng, g.tree());
    c.bench_function("best_response 1093n", |b| b.iter(|| best_response(black_box(&g), &phi, Player::Two).unwrap()));
    c.bench_function("gamma_mixed 1093n", |b| b.iter(|| gamma_mixed(black_box(&g), &phi, &psi).unwrap()));

    let small = random_game(&mut rng, &GameParams { max_period: 3, max_branching: 2, max_nodes: 12, ..GameParams::default() });
    c.bench_function(&format!("pure_gap {}n", small.tree().len()), |b| b.iter(|| pure_gap(black_box(&small), 20).unwrap()));
}

criterion_group!(benches, solver, oracle);
criterion_main!(benches);
