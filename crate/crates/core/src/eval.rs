//! Exact expected payoffs.
//!
//! [`gamma_pure`] walks every path and compares the two stop instants.
//! [`gamma_mixed`] works in behavioral form: at each node nine
//! atom/smear/continue interactions are weighed with closed-form order
//! probabilities, and only the both-continue mass flows on to the children.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::strategy::{Behavior, Player, PureAction, PureStoppingTime, RandomizedStoppingTime};
use crate::tree::{Instant, NodeIx, ScenarioTree};

/// How a player stops inside one period: at the grid instant, or uniformly
/// on `(t_k, t_k + delta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopKind {
    Atom,
    Smear(f64),
}

/// Law of the order of two stops anchored at the same grid instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderProbabilities {
    /// Player 1 stops strictly first.
    pub first: f64,
    /// Player 2 stops strictly first.
    pub second: f64,
    pub tie: f64,
}

pub fn order_probabilities(p1: StopKind, p2: StopKind) -> Result<OrderProbabilities> {
    check_kind(p1)?;
    check_kind(p2)?;
    Ok(match (p1, p2) {
        (StopKind::Atom, StopKind::Atom) => OrderProbabilities { first: 0.0, second: 0.0, tie: 1.0 },
        (StopKind::Atom, StopKind::Smear(_)) => OrderProbabilities { first: 1.0, second: 0.0, tie: 0.0 },
        (StopKind::Smear(_), StopKind::Atom) => OrderProbabilities { first: 0.0, second: 1.0, tie: 0.0 },
        (StopKind::Smear(d1), StopKind::Smear(d2)) => {
            let (first, second) = smear_race(d1, d2);
            OrderProbabilities { first, second, tie: 0.0 }
        }
    })
}

fn check_kind(k: StopKind) -> Result<()> {
    match k {
        StopKind::Smear(d) if !(d > 0.0 && d.is_finite()) => {
            Err(Error::InvalidParameter(format!("smear width must be positive, got {d}")))
        }
        _ => Ok(()),
    }
}

/// `(P(U1·d1 < U2·d2), P(U1·d1 > U2·d2))` for independent uniforms.
fn smear_race(d1: f64, d2: f64) -> (f64, f64) {
    if d1 <= d2 {
        let s = d1 / (2.0 * d2);
        (1.0 - s, s)
    } else {
        let s = d2 / (2.0 * d1);
        (s, 1.0 - s)
    }
}

/// `E[min(U1·d1, U2·d2)]`.
fn smear_race_mean(d1: f64, d2: f64) -> f64 {
    let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
    lo / 2.0 - lo * lo / (6.0 * hi)
}

/// `E[min(U·d, u)]`.
fn smear_capped_mean(d: f64, u: f64) -> f64 {
    if u >= d {
        d / 2.0
    } else {
        u - u * u / (2.0 * d)
    }
}

/// An event made of whole paths, stored as a set of leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    leaves: Vec<bool>,
}

impl Event {
    pub fn all(tree: &ScenarioTree) -> Self {
        let mut leaves = vec![false; tree.len()];
        tree.leaves().iter().for_each(|l| leaves[l.0] = true);
        Event { leaves }
    }

    pub fn empty(tree: &ScenarioTree) -> Self {
        Event { leaves: vec![false; tree.len()] }
    }

    /// All paths passing through any of the given nodes.
    pub fn through(tree: &ScenarioTree, nodes: &[NodeIx]) -> Self {
        let mut ev = Self::empty(tree);
        for &leaf in tree.leaves() {
            ev.leaves[leaf.0] = nodes.iter().any(|&n| tree.is_ancestor_or_self(n, leaf));
        }
        ev
    }

    pub fn through_ids(tree: &ScenarioTree, ids: &[&str]) -> Result<Self> {
        let nodes = ids.iter().map(|id| tree.lookup(id)).collect::<Result<Vec<_>>>()?;
        Ok(Self::through(tree, &nodes))
    }

    pub fn complement(&self, tree: &ScenarioTree) -> Self {
        let mut ev = self.clone();
        for &leaf in tree.leaves() {
            ev.leaves[leaf.0] = !ev.leaves[leaf.0];
        }
        ev
    }

    pub fn contains(&self, leaf: NodeIx) -> bool {
        self.leaves[leaf.0]
    }

    /// `P(event | node)` for every node.
    fn conditional_weights(&self, tree: &ScenarioTree) -> Vec<f64> {
        let mut w = vec![0.0; tree.len()];
        for ix in tree.indices().rev() {
            w[ix.0] = if tree.is_leaf(ix) {
                if self.leaves[ix.0] { 1.0 } else { 0.0 }
            } else {
                tree.expect_children(ix, &w)
            };
        }
        w
    }
}

/// Expected payoff of a pair of pure stopping times.
pub fn gamma_pure(game: &GameSpec, mu: &PureStoppingTime, nu: &PureStoppingTime) -> Result<f64> {
    let tree = game.tree();
    mu.validate(tree)?;
    nu.validate(tree)?;
    let mut total = 0.0;
    for &leaf in tree.leaves() {
        let (n1, t1) = mu.stop_on_path(tree, leaf);
        let (n2, t2) = nu.stop_on_path(tree, leaf);
        let realized = match (t1, t2) {
            (Instant::Never, Instant::Never) => game.terminal_value(leaf) + game.accumulated(leaf),
            _ if t1 < t2 => {
                let n = n1.expect("finite instant has a node");
                game.payoff(n).a + accrued(game, n, t1)
            }
            _ if t1 > t2 => {
                let n = n2.expect("finite instant has a node");
                game.payoff(n).b + accrued(game, n, t2)
            }
            _ => {
                let n = n1.expect("finite instant has a node");
                game.payoff(n).c + accrued(game, n, t1)
            }
        };
        total += tree.node_probability(leaf) * realized;
    }
    Ok(total)
}

fn accrued(game: &GameSpec, node: NodeIx, at: Instant) -> f64 {
    let offset = match at {
        Instant::At { offset, .. } => offset,
        Instant::Never => 0.0,
    };
    game.accumulated(node) + game.effective_rate(node) * offset
}

/// Expected payoff of a pair of randomized stopping times.
pub fn gamma_mixed(game: &GameSpec, phi: &RandomizedStoppingTime, psi: &RandomizedStoppingTime) -> Result<f64> {
    mixed_value(game, phi, psi, None)
}

/// Expected payoff restricted to an event made of whole paths.
pub fn gamma_restricted(
    game: &GameSpec,
    phi: &RandomizedStoppingTime,
    psi: &RandomizedStoppingTime,
    event: &Event,
) -> Result<f64> {
    if event.leaves.len() != game.tree().len() {
        return Err(Error::Mismatch("event built for a different tree".into()));
    }
    let w = event.conditional_weights(game.tree());
    mixed_value(game, phi, psi, Some(&w))
}

fn mixed_value(
    game: &GameSpec,
    phi: &RandomizedStoppingTime,
    psi: &RandomizedStoppingTime,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let tree = game.tree();
    phi.validate(tree)?;
    psi.validate(tree)?;
    let weight = |ix: NodeIx| weights.map_or(1.0, |w| w[ix.0]);
    let mut val = vec![0.0; tree.len()];
    for ix in tree.indices().rev() {
        let (b1, b2) = (phi.behavior(ix), psi.behavior(ix));
        let (q1, q2) = (b1.continue_prob(), b2.continue_prob());
        let stopped = weight(ix) * stop_mass_value(game, ix, b1, b2);
        let go_on = if tree.is_leaf(ix) {
            weight(ix) * (game.terminal_value(ix) + game.accumulated(ix))
        } else {
            tree.expect_children(ix, &val)
        };
        val[ix.0] = stopped + q1 * q2 * go_on;
    }
    Ok(val[tree.root().0])
}

/// Payoff collected at a node from the mass where at least one player stops
/// during the node's period.
fn stop_mass_value(game: &GameSpec, ix: NodeIx, b1: Behavior, b2: Behavior) -> f64 {
    let p = game.payoff(ix);
    let (q1, q2) = (b1.continue_prob(), b2.continue_prob());
    let mut v = b1.atom * b2.atom * p.c
        + b1.atom * (b2.smear + q2) * p.a
        + b1.smear * b2.atom * p.b
        + b1.smear * q2 * p.a
        + q1 * (b2.atom + b2.smear) * p.b;
    let mut mean_offset = b1.smear * q2 * b1.delta / 2.0 + q1 * b2.smear * b2.delta / 2.0;
    if b1.smear > 0.0 && b2.smear > 0.0 {
        let (first, second) = smear_race(b1.delta, b2.delta);
        v += b1.smear * b2.smear * (first * p.a + second * p.b);
        mean_offset += b1.smear * b2.smear * smear_race_mean(b1.delta, b2.delta);
    }
    if game.has_rate() {
        let stop_prob = 1.0 - q1 * q2;
        v += stop_prob * game.accumulated(ix) + game.effective_rate(ix) * mean_offset;
    }
    v
}

/// Expected payoff of a randomized strategy for player 1 against a pure
/// stopping time of player 2; pure stops may sit anywhere inside a period.
pub fn gamma_mixed_vs_pure(game: &GameSpec, phi: &RandomizedStoppingTime, nu: &PureStoppingTime) -> Result<f64> {
    randomized_vs_pure(game, phi, nu, Player::One)
}

/// Expected payoff of a pure stopping time for player 1 against a
/// randomized strategy of player 2.
pub fn gamma_pure_vs_mixed(game: &GameSpec, mu: &PureStoppingTime, psi: &RandomizedStoppingTime) -> Result<f64> {
    randomized_vs_pure(game, psi, mu, Player::Two)
}

fn randomized_vs_pure(
    game: &GameSpec,
    rand: &RandomizedStoppingTime,
    pure: &PureStoppingTime,
    rand_side: Player,
) -> Result<f64> {
    let tree = game.tree();
    rand.validate(tree)?;
    pure.validate(tree)?;
    let mut val = vec![0.0; tree.len()];
    for ix in tree.indices().rev() {
        let Some(action) = pure.decision(ix) else { continue };
        let p = game.payoff(ix);
        let (rand_first, pure_first) = match rand_side {
            Player::One => (p.a, p.b),
            Player::Two => (p.b, p.a),
        };
        let b = rand.behavior(ix);
        let q = b.continue_prob();
        let base = game.accumulated(ix);
        let rate = game.effective_rate(ix);
        val[ix.0] = match action {
            PureAction::Continue => {
                let go_on = if tree.is_leaf(ix) {
                    game.terminal_value(ix) + base
                } else {
                    tree.expect_children(ix, &val)
                };
                (b.atom + b.smear) * (rand_first + base) + b.smear * rate * b.delta / 2.0 + q * go_on
            }
            PureAction::Stop { offset: 0.0 } => b.atom * p.c + (b.smear + q) * pure_first + base,
            PureAction::Stop { offset } => {
                let beat = if b.smear > 0.0 { (offset / b.delta).min(1.0) } else { 0.0 };
                let mut v = (b.atom + b.smear * beat) * rand_first + (b.smear * (1.0 - beat) + q) * pure_first + base;
                if b.smear > 0.0 {
                    v += rate * b.smear * smear_capped_mean(b.delta, offset);
                }
                v + rate * q * offset
            }
        };
    }
    Ok(val[tree.root().0])
}
