//! Payoff processes on a scenario tree and the transforms between games.
//!
//! Each of `a` (player 1 stops first), `b` (player 2 stops first) and `c`
//! (both stop at the same instant) is read as a right-continuous step
//! function: its value anywhere in `[t_k, t_{k+1})` is the node value.
//! An optional final payoff `chi` is paid on leaves when nobody ever stops,
//! and an optional cumulative rate accrues until the game stops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{NodeIx, ScenarioTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payoff {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Payoff {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Payoff { a, b, c }
    }

    pub const fn constant(v: f64) -> Self {
        Payoff { a: v, b: v, c: v }
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Payoff { a: f(self.a), b: f(self.b), c: f(self.c) }
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }
}

/// A stopping game: tree, adapted payoff triple, and optional terminal and
/// cumulative components. Immutable once built; transforms return new games.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    tree: ScenarioTree,
    payoffs: Vec<Payoff>,
    bound: f64,
    chi: Option<Vec<f64>>,
    rate: Option<Vec<f64>>,
    never_stop_payoff: f64,
}

#[derive(Debug, Clone)]
pub struct GameSpecBuilder {
    tree: ScenarioTree,
    payoffs: Vec<Payoff>,
    bound: Option<f64>,
    chi: Option<Vec<f64>>,
    rate: Option<Vec<f64>>,
    never_stop_payoff: f64,
}

impl GameSpecBuilder {
    /// Payoff bound `M`; defaults to the largest `|a|`, `|b|`, `|c|` present.
    pub fn bound(mut self, m: f64) -> Self {
        self.bound = Some(m);
        self
    }

    /// Final payoff on leaves, in [`ScenarioTree::leaves`] order.
    pub fn chi_on_leaves(mut self, values: &[f64]) -> Self {
        let mut full = vec![f64::NAN; self.tree.len()];
        for (slot, &leaf) in values.iter().zip(self.tree.leaves()) {
            full[leaf.0] = *slot;
        }
        if values.len() != self.tree.leaves().len() {
            // Leave a hole so build() reports the missing leaf.
            full.iter_mut().for_each(|v| *v = f64::NAN);
        }
        self.chi = Some(full);
        self
    }

    /// Final payoff indexed by node; only leaf entries are read.
    pub fn chi(mut self, by_node: Vec<f64>) -> Self {
        self.chi = Some(by_node);
        self
    }

    /// Cumulative payoff rate per node, constant over the node's period.
    pub fn rate(mut self, by_node: Vec<f64>) -> Self {
        self.rate = Some(by_node);
        self
    }

    pub fn never_stop_payoff(mut self, v: f64) -> Self {
        self.never_stop_payoff = v;
        self
    }

    pub fn build(self) -> Result<GameSpec> {
        let tree = self.tree;
        let n = tree.len();
        if self.payoffs.len() != n {
            return Err(Error::InvalidGame(format!("{} payoff triples for {} nodes", self.payoffs.len(), n)));
        }
        for (ix, p) in self.payoffs.iter().enumerate() {
            if !(p.a.is_finite() && p.b.is_finite() && p.c.is_finite()) {
                return Err(Error::InvalidGame(format!("non-finite payoff at node {}", tree.id(NodeIx(ix)))));
            }
        }
        if !self.never_stop_payoff.is_finite() {
            return Err(Error::InvalidGame("never_stop_payoff must be finite".into()));
        }
        let mut chi = self.chi;
        if let Some(chi) = chi.as_mut() {
            if chi.len() != n {
                return Err(Error::InvalidGame(format!("chi sized for {} nodes, tree has {}", chi.len(), n)));
            }
            for &leaf in tree.leaves() {
                if !chi[leaf.0].is_finite() {
                    return Err(Error::InvalidGame(format!("chi missing at terminal node {}", tree.id(leaf))));
                }
            }
            for ix in tree.indices() {
                if !tree.is_leaf(ix) {
                    chi[ix.0] = 0.0;
                }
            }
        }
        if let Some(rate) = &self.rate {
            if rate.len() != n {
                return Err(Error::InvalidGame(format!("rate sized for {} nodes, tree has {}", rate.len(), n)));
            }
            if let Some(ix) = rate.iter().position(|r| !r.is_finite()) {
                return Err(Error::InvalidGame(format!("rate missing at node {}", tree.id(NodeIx(ix)))));
            }
        }
        let observed = self.payoffs.iter().map(Payoff::max_abs).fold(0.0, f64::max);
        let bound = match self.bound {
            Some(m) if m < observed => {
                return Err(Error::InvalidGame(format!("bound M = {m} is below the largest payoff magnitude {observed}")))
            }
            Some(m) => m,
            None => observed,
        };
        Ok(GameSpec { tree, payoffs: self.payoffs, bound, chi, rate: self.rate, never_stop_payoff: self.never_stop_payoff })
    }
}

impl GameSpec {
    pub fn builder(tree: ScenarioTree, payoffs: Vec<Payoff>) -> GameSpecBuilder {
        GameSpecBuilder { tree, payoffs, bound: None, chi: None, rate: None, never_stop_payoff: 0.0 }
    }

    /// Game with plain payoffs: no final payoff, no rate, never-stop payoff 0.
    pub fn new(tree: ScenarioTree, payoffs: Vec<Payoff>) -> Result<Self> {
        Self::builder(tree, payoffs).build()
    }

    /// Game whose payoff triple is the same at every node.
    pub fn constant(tree: ScenarioTree, p: Payoff) -> Result<Self> {
        let n = tree.len();
        Self::new(tree, vec![p; n])
    }

    pub fn tree(&self) -> &ScenarioTree {
        &self.tree
    }

    pub fn payoff(&self, ix: NodeIx) -> Payoff {
        self.payoffs[ix.0]
    }

    pub fn payoffs(&self) -> &[Payoff] {
        &self.payoffs
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn never_stop_payoff(&self) -> f64 {
        self.never_stop_payoff
    }

    pub fn has_chi(&self) -> bool {
        self.chi.is_some()
    }

    pub fn has_rate(&self) -> bool {
        self.rate.is_some()
    }

    pub fn chi(&self, leaf: NodeIx) -> Option<f64> {
        self.chi.as_ref().map(|c| c[leaf.0])
    }

    pub fn rate(&self, ix: NodeIx) -> Option<f64> {
        self.rate.as_ref().map(|r| r[ix.0])
    }

    /// Payoff triple in force at `t_k + offset` for a node at period `k`.
    /// The step-function reading makes this the node value for any offset
    /// inside the period.
    pub fn payoff_at(&self, ix: NodeIx, offset: f64) -> Payoff {
        debug_assert!(offset >= 0.0);
        debug_assert!(self.tree.period_length(self.tree.period_of(ix)).is_none_or(|len| offset < len));
        self.payoffs[ix.0]
    }

    /// Rate that actually accrues during the node's period; accrual stops at
    /// the last grid time.
    pub fn effective_rate(&self, ix: NodeIx) -> f64 {
        match &self.rate {
            Some(r) if self.tree.period_of(ix) < self.tree.last_period() => r[ix.0],
            _ => 0.0,
        }
    }

    /// Cumulative payoff accrued from time 0 up to the node's grid time.
    pub fn accumulated(&self, ix: NodeIx) -> f64 {
        if self.rate.is_none() {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut cur = ix;
        while let Some(p) = self.tree.parent(cur) {
            let k = self.tree.period_of(p);
            acc += self.effective_rate(p) * (self.tree.time(k + 1) - self.tree.time(k));
            cur = p;
        }
        acc
    }

    /// Payoff on a leaf's path when nobody ever stops, excluding the
    /// cumulative part.
    pub fn terminal_value(&self, leaf: NodeIx) -> f64 {
        self.never_stop_payoff + self.chi(leaf).unwrap_or(0.0)
    }

    /// Same game with the payoff triple replaced.
    pub fn with_payoffs(&self, payoffs: Vec<Payoff>) -> Result<Self> {
        let mut b = Self::builder(self.tree.clone(), payoffs).never_stop_payoff(self.never_stop_payoff);
        b.chi = self.chi.clone();
        b.rate = self.rate.clone();
        let observed = b.payoffs.iter().map(Payoff::max_abs).fold(0.0, f64::max);
        b.bound = Some(self.bound.max(observed));
        b.build()
    }

    /// Clamps every payoff into `[-r, r]`.
    pub fn truncate(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation bound must be positive, got {r}")));
        }
        let clamp = |x: f64| x.clamp(-r, r);
        Ok(GameSpec {
            tree: self.tree.clone(),
            payoffs: self.payoffs.iter().map(|p| p.map(clamp)).collect(),
            bound: self.bound.min(r),
            chi: self.chi.as_ref().map(|v| v.iter().copied().map(clamp).collect()),
            rate: self.rate.as_ref().map(|v| v.iter().copied().map(clamp).collect()),
            never_stop_payoff: self.never_stop_payoff,
        })
    }

    /// Removes the final payoff by subtracting its conditional-expectation
    /// martingale from `a`, `b`, `c`. Returns the expected final payoff and
    /// the reduced game, which pays 0 when nobody stops. The never-stop
    /// payoff is folded into the final payoff first.
    pub fn reduce_final_payoff(&self) -> Result<(f64, GameSpec)> {
        let Some(chi) = &self.chi else {
            return Err(Error::Precondition("game has no final payoff".into()));
        };
        let tree = &self.tree;
        let mut d = vec![0.0; tree.len()];
        for ix in tree.indices().rev() {
            d[ix.0] = if tree.is_leaf(ix) {
                self.never_stop_payoff + chi[ix.0]
            } else {
                tree.expect_children(ix, &d)
            };
        }
        let payoffs: Vec<Payoff> = self.payoffs.iter().zip(&d).map(|(p, &m)| p.map(|x| x - m)).collect();
        let mut b = Self::builder(tree.clone(), payoffs);
        b.rate = self.rate.clone();
        Ok((d[tree.root().0], b.build()?))
    }

    /// Folds the cumulative rate into the stopping payoffs and the final
    /// payoff. Accrual is truncated at the last grid time.
    pub fn reduce_cumulative(&self) -> Result<GameSpec> {
        if self.rate.is_none() {
            return Err(Error::Precondition("game has no cumulative rate".into()));
        }
        let tree = &self.tree;
        let acc: Vec<f64> = tree.indices().map(|ix| self.accumulated(ix)).collect();
        let payoffs: Vec<Payoff> = self.payoffs.iter().zip(&acc).map(|(p, &i)| p.map(|x| x + i)).collect();
        let chi: Vec<f64> = tree
            .indices()
            .map(|ix| if tree.is_leaf(ix) { acc[ix.0] + self.chi(ix).unwrap_or(0.0) } else { 0.0 })
            .collect();
        Self::builder(tree.clone(), payoffs).chi(chi).never_stop_payoff(self.never_stop_payoff).build()
    }
}
