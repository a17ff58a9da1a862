//! Exact best responses and pure-strategy bounds.
//!
//! This module shares no value code with [`crate::solver`]; it is the
//! independent check that solver output is certified against.
//!
//! Against a behavioral strategy, a responder stopping at offset `u` inside
//! a node's period gets a payoff that is affine in `u` on `(0, delta]` (the
//! opponent's smear is uniform and payoffs are constant in the period).
//! So an optimal pure response only needs the grid instant `u = 0`, the
//! limit `u -> 0+` (after the opponent's atom, ahead of its smear), the far
//! end `u = delta` (after the whole smear), or continuing. Backward
//! induction over these four actions gives the exact optimum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::strategy::{Player, PureAction, PureStoppingTime, RandomizedStoppingTime};
use crate::tree::{NodeIx, ScenarioTree};

/// Offset, as a fraction of the opponent's smear width, used to realize a
/// just-after-atom response as a concrete stopping time.
pub const JUST_AFTER_FRACTION: f64 = 1e-9;

/// Default node cap for [`pure_gap`].
pub const DEFAULT_GAP_BUDGET: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseAction {
    Continue,
    /// Stop at the grid instant, tying with the opponent's atom.
    Atom,
    /// Stop immediately after the opponent's atom, ahead of its smear.
    JustAfterAtom,
    /// Stop after the opponent's whole smear.
    PastSmear,
}

#[derive(Debug, Clone)]
pub struct BestResponseReport {
    pub responder: Player,
    /// Optimal value (a supremum for player 1, an infimum for player 2).
    pub value: f64,
    /// A pure response attaining `value`, or within `JUST_AFTER_FRACTION`
    /// of the payoff span when a just-after-atom action is used.
    pub response: PureStoppingTime,
    /// Chosen action at each node reached by the response.
    pub actions: Vec<Option<ResponseAction>>,
}

impl BestResponseReport {
    pub fn uses_limit_action(&self) -> bool {
        self.actions.contains(&Some(ResponseAction::JustAfterAtom))
    }
}

/// Best pure response of `responder` to the other player's `opponent`.
pub fn best_response(
    game: &GameSpec,
    opponent: &RandomizedStoppingTime,
    responder: Player,
) -> Result<BestResponseReport> {
    if game.has_rate() {
        return Err(Error::Unsupported("game has a cumulative rate; reduce it to a final payoff first".into()));
    }
    let tree = game.tree();
    opponent.validate(tree)?;

    let mut value = vec![0.0; tree.len()];
    let mut choice = vec![ResponseAction::Continue; tree.len()];
    for ix in tree.indices().rev() {
        let p = game.payoff(ix);
        let (opp_first, resp_first) = match responder {
            Player::One => (p.b, p.a),
            Player::Two => (p.a, p.b),
        };
        let b = opponent.behavior(ix);
        let (pa, ps, q) = (b.atom, b.smear, b.continue_prob());
        let carry_on = if tree.is_leaf(ix) { game.terminal_value(ix) } else { tree.expect_children(ix, &value) };

        let mut cands = vec![
            (ResponseAction::Atom, pa * p.c + (ps + q) * resp_first),
            (ResponseAction::Continue, (pa + ps) * opp_first + q * carry_on),
        ];
        if pa + ps > 0.0 {
            cands.push((ResponseAction::PastSmear, (pa + ps) * opp_first + q * resp_first));
        }
        if pa > 0.0 && ps > 0.0 {
            cands.push((ResponseAction::JustAfterAtom, pa * opp_first + (ps + q) * resp_first));
        }
        let better = |x: f64, y: f64| match responder {
            Player::One => x > y,
            Player::Two => x < y,
        };
        let (mut best_a, mut best_v) = cands[0];
        for &(a, v) in &cands[1..] {
            if better(v, best_v) {
                best_a = a;
                best_v = v;
            }
        }
        value[ix.0] = best_v;
        choice[ix.0] = best_a;
    }

    let mut actions = vec![None; tree.len()];
    let response = PureStoppingTime::from_fn(tree, |ix| {
        let a = choice[ix.0];
        actions[ix.0] = Some(a);
        realize(tree, opponent, ix, a)
    });
    Ok(BestResponseReport { responder, value: value[tree.root().0], response, actions })
}

fn realize(tree: &ScenarioTree, opponent: &RandomizedStoppingTime, ix: NodeIx, a: ResponseAction) -> PureAction {
    let b = opponent.behavior(ix);
    match a {
        ResponseAction::Continue => PureAction::Continue,
        ResponseAction::Atom => PureAction::ATOM,
        ResponseAction::JustAfterAtom => PureAction::Stop { offset: b.delta * JUST_AFTER_FRACTION },
        ResponseAction::PastSmear if b.smear > 0.0 => PureAction::Stop { offset: b.delta },
        ResponseAction::PastSmear => {
            let room = tree.period_length(tree.period_of(ix)).unwrap_or(1.0);
            PureAction::Stop { offset: room / 2.0 }
        }
    }
}

/// What `strategy` secures for `side` against a best-responding opponent.
pub fn guarantee(game: &GameSpec, strategy: &RandomizedStoppingTime, side: Player) -> Result<f64> {
    best_response(game, strategy, side.other()).map(|r| r.value)
}

#[derive(Debug, Clone)]
pub struct PureGapReport {
    /// `sup over mu of inf over nu` of the pure payoff.
    pub sup_inf: f64,
    /// `inf over nu of sup over mu`.
    pub inf_sup: f64,
    /// A player-1 stopping time attaining `sup_inf`.
    pub maximizer: PureStoppingTime,
    /// A player-2 stopping time attaining `inf_sup`.
    pub minimizer: PureStoppingTime,
    /// Number of grid stopping times enumerated per player.
    pub candidates: usize,
}

impl PureGapReport {
    pub fn has_pure_value(&self, tol: f64) -> bool {
        (self.inf_sup - self.sup_inf).abs() <= tol
    }
}

/// Calls `f` on every grid stopping time of the tree (normalized form).
pub fn for_each_grid_stopping_time(tree: &ScenarioTree, f: &mut dyn FnMut(&PureStoppingTime)) {
    fn rec(
        tree: &ScenarioTree,
        dec: &mut Vec<Option<PureAction>>,
        pending: &mut Vec<NodeIx>,
        f: &mut dyn FnMut(&PureStoppingTime),
    ) {
        let Some(ix) = pending.pop() else {
            f(&PureStoppingTime::from_decisions(dec.clone()));
            return;
        };
        dec[ix.0] = Some(PureAction::ATOM);
        rec(tree, dec, pending, f);
        dec[ix.0] = Some(PureAction::Continue);
        let mark = pending.len();
        pending.extend_from_slice(tree.children(ix));
        rec(tree, dec, pending, f);
        pending.truncate(mark);
        dec[ix.0] = None;
        pending.push(ix);
    }
    let mut dec = vec![None; tree.len()];
    let mut pending = vec![tree.root()];
    rec(tree, &mut dec, &mut pending, f);
}

/// Pure sup-inf and inf-sup over grid stopping times. The outer player is
/// enumerated; the inner optimum is an exact best response.
pub fn pure_gap(game: &GameSpec, budget: usize) -> Result<PureGapReport> {
    let tree = game.tree();
    if tree.len() > budget {
        return Err(Error::BudgetExceeded { nodes: tree.len(), budget });
    }
    if game.has_rate() {
        return Err(Error::Unsupported("game has a cumulative rate; reduce it to a final payoff first".into()));
    }
    let mut sup_inf = (f64::NEG_INFINITY, None);
    let mut inf_sup = (f64::INFINITY, None);
    let mut candidates = 0;
    let mut failure = None;
    for_each_grid_stopping_time(tree, &mut |sigma| {
        candidates += 1;
        let as_strategy = match RandomizedStoppingTime::from_pure(tree, sigma) {
            Ok(s) => s,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        match (best_response(game, &as_strategy, Player::Two), best_response(game, &as_strategy, Player::One)) {
            (Ok(low), Ok(high)) => {
                if low.value > sup_inf.0 {
                    sup_inf = (low.value, Some(sigma.clone()));
                }
                if high.value < inf_sup.0 {
                    inf_sup = (high.value, Some(sigma.clone()));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(PureGapReport {
        sup_inf: sup_inf.0,
        inf_sup: inf_sup.0,
        maximizer: sup_inf.1.expect("at least one stopping time"),
        minimizer: inf_sup.1.expect("at least one stopping time"),
        candidates,
    })
}
