//! Seeded random games and strategies for property tests, the acceptance
//! suite and `certify --fuzz`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::game::{GameSpec, Payoff};
use crate::strategy::{Behavior, RandomizedStoppingTime};
use crate::tree::{NodeDoc, NodeIx, ScenarioTree, TreeDoc};

/// Constraint on the payoff triple drawn at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffShape {
    Any,
    /// `a <= b` everywhere.
    Ordered,
    /// `c` between `a` and `b` everywhere.
    Between,
}

#[derive(Debug, Clone)]
pub struct GameParams {
    pub max_period: usize,
    pub max_branching: usize,
    pub max_nodes: usize,
    /// Payoffs are integers in `[-payoff_range, payoff_range]`.
    pub payoff_range: i32,
    pub shape: PayoffShape,
    pub with_chi: bool,
    pub with_rate: bool,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            max_period: 4,
            max_branching: 3,
            max_nodes: 60,
            payoff_range: 5,
            shape: PayoffShape::Any,
            with_chi: false,
            with_rate: false,
        }
    }
}

/// Grid steps are multiples of 1/4 in `[1/2, 2]`, so every period is
/// longer than any smear width the generators produce.
fn random_grid<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    for _ in 0..k {
        let step = rng.gen_range(2..=8) as f64 / 4.0;
        grid.push(grid.last().unwrap() + step);
    }
    grid
}

/// Branch probabilities with small integer weights.
fn random_split<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let total: u32 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|&x| x as f64 / total as f64).collect();
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - head;
    p
}

/// A random tree with `1..=max_period` periods. Branching is capped so the
/// tree never exceeds `max_nodes` nodes.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, max_period: usize, max_branching: usize, max_nodes: usize) -> ScenarioTree {
    let k = rng.gen_range(1..=max_period.max(1));
    let time_grid = random_grid(rng, k);
    let mut nodes = vec![NodeDoc { id: "n0".into(), period: 0, parent: None, prob: None }];
    let mut frontier = vec![0usize];
    for period in 1..=k {
        let mut next = Vec::new();
        let remaining_levels = k - period;
        for &p in &frontier {
            // Every node still open needs at least one child per remaining level.
            let open_after = frontier.len() - 1 + next.len();
            let reserve = (open_after + 1) * (remaining_levels + 1);
            let room = max_nodes.saturating_sub(nodes.len() + reserve);
            let cap = max_branching.max(1).min(1 + room / (remaining_levels + 1));
            let n = rng.gen_range(1..=cap.max(1));
            let probs = random_split(rng, n);
            let parent_id = nodes[p].id.clone();
            for prob in probs {
                let id = format!("n{}", nodes.len());
                next.push(nodes.len());
                nodes.push(NodeDoc { id, period, parent: Some(parent_id.clone()), prob: Some(prob) });
            }
        }
        frontier = next;
    }
    ScenarioTree::build(&TreeDoc { time_grid, nodes }).expect("generated tree is valid")
}

pub fn random_payoff<R: Rng + ?Sized>(rng: &mut R, range: i32, shape: PayoffShape) -> Payoff {
    let mut draw = || rng.gen_range(-range..=range) as f64;
    let (mut a, mut b, c) = (draw(), draw(), draw());
    match shape {
        PayoffShape::Any => Payoff::new(a, b, c),
        PayoffShape::Ordered => {
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            Payoff::new(a, b, c)
        }
        PayoffShape::Between => {
            let (lo, hi) = (a.min(b), a.max(b));
            Payoff::new(a, b, c.clamp(lo, hi))
        }
    }
}

pub fn random_game<R: Rng + ?Sized>(rng: &mut R, params: &GameParams) -> GameSpec {
    let tree = random_tree(rng, params.max_period, params.max_branching, params.max_nodes);
    let payoffs = (0..tree.len()).map(|_| random_payoff(rng, params.payoff_range, params.shape)).collect();
    let chi = params
        .with_chi
        .then(|| (0..tree.len()).map(|_| rng.gen_range(-params.payoff_range..=params.payoff_range) as f64).collect());
    let rate = params.with_rate.then(|| (0..tree.len()).map(|_| rng.gen_range(-2..=2) as f64).collect());
    let never = if params.with_chi { rng.gen_range(-2..=2) as f64 } else { 0.0 };
    let mut b = GameSpec::builder(tree, payoffs).never_stop_payoff(never);
    if let Some(chi) = chi {
        b = b.chi(chi);
    }
    if let Some(rate) = rate {
        b = b.rate(rate);
    }
    b.build().expect("generated game is valid")
}

/// Replaces `c` at every node by a fresh draw.
pub fn redraw_c<R: Rng + ?Sized>(rng: &mut R, game: &GameSpec, range: i32) -> GameSpec {
    let payoffs = game
        .payoffs()
        .iter()
        .map(|p| Payoff::new(p.a, p.b, rng.gen_range(-range..=range) as f64))
        .collect();
    GameSpec::builder(game.tree().clone(), payoffs)
        .never_stop_payoff(game.never_stop_payoff())
        .build()
        .expect("redrawn game is valid")
}

/// A smear width strictly inside the node's period. The final period is
/// unbounded; widths there stay below 2.
pub fn random_delta<R: Rng + ?Sized>(rng: &mut R, tree: &ScenarioTree, ix: NodeIx) -> f64 {
    let len = tree.period_length(tree.period_of(ix)).unwrap_or(2.0);
    rng.gen_range(0.05..0.95) * len
}

/// A behavioral strategy mixing continue, atoms, smears and mixtures, with
/// occasional sure stops.
pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, tree: &ScenarioTree) -> RandomizedStoppingTime {
    let behaviors = tree
        .indices()
        .map(|ix| {
            let kinds = ["continue", "atom", "smear", "mixed"];
            let prob = |rng: &mut R| if rng.gen_bool(0.25) { 1.0 } else { rng.gen_range(0.0..1.0) };
            match *kinds.choose(rng).unwrap() {
                "continue" => Behavior::CONTINUE,
                "atom" => Behavior::mixed(prob(rng), 0.0, 0.0),
                "smear" => {
                    let p = prob(rng);
                    Behavior::mixed(0.0, p, random_delta(rng, tree, ix))
                }
                _ => {
                    let total = prob(rng);
                    let split = rng.gen_range(0.0..1.0);
                    Behavior::mixed(total * split, total * (1.0 - split), random_delta(rng, tree, ix))
                }
            }
        })
        .collect();
    RandomizedStoppingTime::from_behaviors(behaviors)
}
