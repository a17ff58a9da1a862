//! Value and near-pure optimal strategies.
//!
//! The construction runs in four steps:
//!
//! 1. [`frontier`] finds the first node on each path where `a >= b`, tags it
//!    by where `c` sits relative to `a` and `b`, and fixes the reward `w`
//!    paid there (`a`, `c` or `b` respectively).
//! 2. [`freeze`] sets all three payoffs to `w` at and after that node. The
//!    frozen game has `a < b` before the frontier and `a = b = c` after it.
//! 3. [`value_process`] runs the Dynkin recursion `V = min(b, max(a, E[V']))`
//!    backward through the frozen game. `c` does not enter it: with
//!    `a <= b` a player who wants to stop can always smear to avoid a tie.
//! 4. [`epsilon_optimal_strategy`] stops at the first node where `V` comes
//!    within `eps` of the player's own stopping payoff, exactly at the grid
//!    instant where a tie cannot hurt, and smeared over `(t, t + delta]`
//!    everywhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, Payoff};
use crate::strategy::{Player, PureStoppingTime, RandomizedStoppingTime};
use crate::tree::NodeIx;

/// Classification of a frontier node (where `a >= b` for the first time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrontierTag {
    /// `c >= a >= b`; reward `a`.
    A1,
    /// `a > c >= b`; reward `c`.
    A2,
    /// `a >= b > c`; reward `b`.
    A3,
}

impl FrontierTag {
    /// Tag of a triple with `a >= b`. Predicates are tried in order so
    /// equalities resolve to the first match.
    pub fn classify(p: Payoff) -> Option<FrontierTag> {
        if p.a < p.b {
            None
        } else if p.c >= p.a {
            Some(FrontierTag::A1)
        } else if p.c >= p.b {
            Some(FrontierTag::A2)
        } else {
            Some(FrontierTag::A3)
        }
    }

    pub fn reward(self, p: Payoff) -> f64 {
        match self {
            FrontierTag::A1 => p.a,
            FrontierTag::A2 => p.c,
            FrontierTag::A3 => p.b,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FrontierTag::A1 => "A1",
            FrontierTag::A2 => "A2",
            FrontierTag::A3 => "A3",
        }
    }

    /// Whether `side` should stop exactly at the frontier (no smear) when its
    /// threshold fires there: player 1 on A1/A2, player 2 on A2/A3.
    fn exact_for(self, side: Player) -> bool {
        match side {
            Player::One => matches!(self, FrontierTag::A1 | FrontierTag::A2),
            Player::Two => matches!(self, FrontierTag::A2 | FrontierTag::A3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub tag: FrontierTag,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierAnalysis {
    tau: PureStoppingTime,
    entries: Vec<Option<FrontierEntry>>,
    owner: Vec<Option<NodeIx>>,
    never_reached: Vec<NodeIx>,
}

impl FrontierAnalysis {
    /// First-entry time into `{a >= b}`, as a grid stopping time.
    pub fn tau(&self) -> &PureStoppingTime {
        &self.tau
    }

    /// Tag and reward if `ix` is a frontier node.
    pub fn entry(&self, ix: NodeIx) -> Option<FrontierEntry> {
        self.entries[ix.0]
    }

    /// The frontier node at or above `ix`, if the path has reached it.
    pub fn frontier_of(&self, ix: NodeIx) -> Option<NodeIx> {
        self.owner[ix.0]
    }

    /// Strictly before the frontier (or on a path that never reaches it).
    pub fn is_before(&self, ix: NodeIx) -> bool {
        self.owner[ix.0].is_none()
    }

    /// Frontier nodes in tree order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeIx, FrontierEntry)> + '_ {
        self.entries.iter().enumerate().filter_map(|(k, e)| e.map(|e| (NodeIx(k), e)))
    }

    /// Leaves of paths that never reach the frontier (the event A0).
    pub fn never_reached(&self) -> &[NodeIx] {
        &self.never_reached
    }
}

pub fn frontier(game: &GameSpec) -> FrontierAnalysis {
    let tree = game.tree();
    let mut entries = vec![None; tree.len()];
    let mut owner: Vec<Option<NodeIx>> = vec![None; tree.len()];
    for ix in tree.indices() {
        if let Some(o) = tree.parent(ix).and_then(|p| owner[p.0]) {
            owner[ix.0] = Some(o);
            continue;
        }
        let p = game.payoff(ix);
        if let Some(tag) = FrontierTag::classify(p) {
            entries[ix.0] = Some(FrontierEntry { tag, reward: tag.reward(p) });
            owner[ix.0] = Some(ix);
        }
    }
    let tau_nodes: Vec<NodeIx> = tree.indices().filter(|ix| entries[ix.0].is_some()).collect();
    let never_reached = tree.leaves().iter().copied().filter(|l| owner[l.0].is_none()).collect();
    FrontierAnalysis { tau: PureStoppingTime::stop_at_nodes(tree, &tau_nodes), entries, owner, never_reached }
}

/// The frozen game: payoffs set to the frontier reward at and after the frontier.
pub fn freeze(game: &GameSpec, f: &FrontierAnalysis) -> Result<GameSpec> {
    if f.entries.len() != game.tree().len() || *f != frontier(game) {
        return Err(Error::Mismatch("frontier analysis was not computed from this game".into()));
    }
    let payoffs = game
        .tree()
        .indices()
        .map(|ix| match f.frontier_of(ix) {
            Some(t) => Payoff::constant(f.entries[t.0].expect("owner is a frontier node").reward),
            None => game.payoff(ix),
        })
        .collect();
    game.with_payoffs(payoffs)
}

/// Value of the game started at each node, with the one-step continuation
/// value (the terminal payoff on leaves).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueProcess {
    values: Vec<f64>,
    continuation: Vec<f64>,
}

impl ValueProcess {
    pub fn value(&self, ix: NodeIx) -> f64 {
        self.values[ix.0]
    }

    pub fn continuation(&self, ix: NodeIx) -> f64 {
        self.continuation[ix.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn reject_rates(game: &GameSpec) -> Result<()> {
    if game.has_rate() {
        return Err(Error::Unsupported(
            "game has a cumulative rate; reduce it to a final payoff first".into(),
        ));
    }
    Ok(())
}

/// Backward induction on a game with `a <= b` at every node (in particular
/// any output of [`freeze`]).
pub fn value_process(frozen: &GameSpec) -> Result<ValueProcess> {
    reject_rates(frozen)?;
    let tree = frozen.tree();
    if let Some(ix) = tree.indices().find(|&ix| frozen.payoff(ix).a > frozen.payoff(ix).b) {
        return Err(Error::Precondition(format!(
            "a > b at node {}; value_process needs a frozen game",
            tree.id(ix)
        )));
    }
    let mut values = vec![0.0; tree.len()];
    let mut continuation = vec![0.0; tree.len()];
    for ix in tree.indices().rev() {
        let cont = if tree.is_leaf(ix) { frozen.terminal_value(ix) } else { tree.expect_children(ix, &values) };
        let p = frozen.payoff(ix);
        continuation[ix.0] = cont;
        values[ix.0] = p.b.min(p.a.max(cont));
    }
    Ok(ValueProcess { values, continuation })
}

/// First node where the value is within `eps` of the player's own stopping
/// payoff: `V <= a + eps` for player 1, `V >= b - eps` for player 2.
pub fn optimal_threshold_time(
    v: &ValueProcess,
    frozen: &GameSpec,
    side: Player,
    eps: f64,
) -> Result<PureStoppingTime> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    let tree = frozen.tree();
    if v.values.len() != tree.len() {
        return Err(Error::Mismatch("value process sized for a different tree".into()));
    }
    let fires = |ix: NodeIx| {
        let p = frozen.payoff(ix);
        match side {
            Player::One => v.value(ix) <= p.a + eps,
            Player::Two => v.value(ix) >= p.b - eps,
        }
    };
    let stops: Vec<NodeIx> = tree.indices().filter(|&ix| fires(ix)).collect();
    let mu = PureStoppingTime::stop_at_nodes(tree, &stops);
    // The threshold always holds where the frozen payoffs coincide, so it
    // never fires after the frontier.
    let f = frontier(frozen);
    for (ix, _) in mu.stop_nodes(tree) {
        assert!(
            f.frontier_of(ix).is_none_or(|t| t == ix),
            "threshold time fires after the frontier at node {}",
            tree.id(ix)
        );
    }
    Ok(mu)
}

/// The delta-almost-pure eps-optimal strategy of `side`.
pub fn epsilon_optimal_strategy(game: &GameSpec, side: Player, eps: f64, delta: f64) -> Result<RandomizedStoppingTime> {
    let f = frontier(game);
    let frozen = freeze(game, &f)?;
    let v = value_process(&frozen)?;
    assemble(game, &f, &frozen, &v, side, eps, delta)
}

fn assemble(
    game: &GameSpec,
    f: &FrontierAnalysis,
    frozen: &GameSpec,
    v: &ValueProcess,
    side: Player,
    eps: f64,
    delta: f64,
) -> Result<RandomizedStoppingTime> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let tree = game.tree();
    let mu = optimal_threshold_time(v, frozen, side, eps)?;
    let exact: Vec<NodeIx> = mu
        .stop_nodes(tree)
        .into_iter()
        .filter_map(|(ix, _)| f.entry(ix).filter(|e| e.tag.exact_for(side)).map(|_| ix))
        .collect();
    RandomizedStoppingTime::delta_almost_pure(tree, &mu, &exact, delta)
}

#[derive(Debug, Clone)]
pub struct ValueReport {
    pub value: f64,
    pub frontier: FrontierAnalysis,
    pub values: ValueProcess,
    pub player_one: RandomizedStoppingTime,
    pub player_two: RandomizedStoppingTime,
}

pub fn game_value(game: &GameSpec, eps: f64, delta: f64) -> Result<ValueReport> {
    let f = frontier(game);
    let frozen = freeze(game, &f)?;
    let values = value_process(&frozen)?;
    let player_one = assemble(game, &f, &frozen, &values, Player::One, eps, delta)?;
    let player_two = assemble(game, &f, &frozen, &values, Player::Two, eps, delta)?;
    Ok(ValueReport { value: values.value(game.tree().root()), frontier: f, values, player_one, player_two })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureValue {
    pub value: f64,
    pub player_one: PureStoppingTime,
    pub player_two: PureStoppingTime,
}

/// When `c` lies between `a` and `b` at every node up to and including the
/// frontier, the value is attained by pure threshold times. Returns `None`
/// when the condition fails.
pub fn pure_value_check(game: &GameSpec, eps: f64) -> Result<Option<PureValue>> {
    let f = frontier(game);
    let tree = game.tree();
    let applies = tree.indices().filter(|&ix| f.frontier_of(ix).is_none_or(|t| t == ix)).all(|ix| {
        let p = game.payoff(ix);
        p.a.min(p.b) <= p.c && p.c <= p.a.max(p.b)
    });
    if !applies {
        return Ok(None);
    }
    let frozen = freeze(game, &f)?;
    let v = value_process(&frozen)?;
    Ok(Some(PureValue {
        value: v.value(tree.root()),
        player_one: optimal_threshold_time(&v, &frozen, Player::One, eps)?,
        player_two: optimal_threshold_time(&v, &frozen, Player::Two, eps)?,
    }))
}
