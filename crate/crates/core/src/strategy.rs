//! Pure and randomized stopping times on a scenario tree.
//!
//! A randomized stopping time is stored in behavioral form: at each node
//! reached with nobody having stopped, the player stops at the grid instant
//! with some probability (an *atom*), stops uniformly inside `(t_k, t_k + δ]`
//! with some probability (a *smear*), and otherwise continues. The mixed
//! (single uniform draw) view is recovered with
//! [`RandomizedStoppingTime::sample_section`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Instant, NodeIx, ScenarioTree};

/// Slack allowed when checking that stop probabilities at a node sum to at most one.
const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn from_index(i: u8) -> Option<Player> {
        match i {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PureAction {
    Continue,
    /// Stop at `t_k + offset`.
    Stop { offset: f64 },
}

impl PureAction {
    pub const ATOM: PureAction = PureAction::Stop { offset: 0.0 };

    pub fn is_stop(&self) -> bool {
        matches!(self, PureAction::Stop { .. })
    }
}

/// A pure stopping time: one decision per node reached before stopping.
/// Nodes strictly below a stopping node carry no decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStoppingTime {
    decisions: Vec<Option<PureAction>>,
}

impl PureStoppingTime {
    /// Raw decisions, indexed by node. Not normalized or validated.
    pub fn from_decisions(decisions: Vec<Option<PureAction>>) -> Self {
        PureStoppingTime { decisions }
    }

    pub fn never(tree: &ScenarioTree) -> Self {
        Self::from_fn(tree, |_| PureAction::Continue)
    }

    /// Builds a normalized stopping time by querying `f` top-down at every
    /// node not below a stopping node.
    pub fn from_fn(tree: &ScenarioTree, mut f: impl FnMut(NodeIx) -> PureAction) -> Self {
        let mut decisions = vec![None; tree.len()];
        let mut live = vec![false; tree.len()];
        live[tree.root().0] = true;
        for ix in tree.indices() {
            if !live[ix.0] {
                continue;
            }
            let d = f(ix);
            decisions[ix.0] = Some(d);
            if !d.is_stop() {
                for &c in tree.children(ix) {
                    live[c.0] = true;
                }
            }
        }
        PureStoppingTime { decisions }
    }

    /// Stops at the grid instant of the first listed node met on each path.
    pub fn stop_at_nodes(tree: &ScenarioTree, nodes: &[NodeIx]) -> Self {
        let mut mark = vec![false; tree.len()];
        for n in nodes {
            mark[n.0] = true;
        }
        Self::from_fn(tree, |ix| if mark[ix.0] { PureAction::ATOM } else { PureAction::Continue })
    }

    pub fn decision(&self, ix: NodeIx) -> Option<PureAction> {
        self.decisions.get(ix.0).copied().flatten()
    }

    pub fn decisions(&self) -> &[Option<PureAction>] {
        &self.decisions
    }

    /// Nodes where the stopping time fires, with their in-period offsets.
    pub fn stop_nodes(&self, tree: &ScenarioTree) -> Vec<(NodeIx, f64)> {
        let mut out = Vec::new();
        let mut live = vec![false; tree.len()];
        live[tree.root().0] = true;
        for ix in tree.indices() {
            if !live[ix.0] {
                continue;
            }
            match self.decision(ix) {
                Some(PureAction::Stop { offset }) => out.push((ix, offset)),
                _ => tree.children(ix).iter().for_each(|c| live[c.0] = true),
            }
        }
        out
    }

    /// Stopping node and instant along the path ending at `leaf`.
    pub fn stop_on_path(&self, tree: &ScenarioTree, leaf: NodeIx) -> (Option<NodeIx>, Instant) {
        for ix in tree.path_to(leaf) {
            if let Some(PureAction::Stop { offset }) = self.decision(ix) {
                return (Some(ix), Instant::At { period: tree.period_of(ix), offset });
            }
        }
        (None, Instant::Never)
    }

    /// True when every stop happens at a grid instant.
    pub fn is_grid(&self) -> bool {
        self.decisions.iter().all(|d| !matches!(d, Some(PureAction::Stop { offset }) if *offset != 0.0))
    }

    /// Checks totality on reachable nodes and legality of offsets.
    pub fn validate(&self, tree: &ScenarioTree) -> Result<()> {
        if self.decisions.len() != tree.len() {
            return Err(Error::Mismatch(format!(
                "stopping time has {} node slots, tree has {} nodes",
                self.decisions.len(),
                tree.len()
            )));
        }
        let mut live = vec![false; tree.len()];
        live[tree.root().0] = true;
        for ix in tree.indices() {
            if !live[ix.0] {
                continue;
            }
            match self.decisions[ix.0] {
                None => {
                    return Err(Error::InvalidStrategy(format!("missing decision at node {}", tree.id(ix))));
                }
                Some(PureAction::Continue) => tree.children(ix).iter().for_each(|c| live[c.0] = true),
                Some(PureAction::Stop { offset }) => {
                    if !(offset >= 0.0 && offset.is_finite()) {
                        return Err(Error::InvalidStrategy(format!(
                            "offset at node {} must be a finite nonnegative number, got {}",
                            tree.id(ix),
                            offset
                        )));
                    }
                    if let Some(len) = tree.period_length(tree.period_of(ix)) {
                        if offset >= len {
                            return Err(Error::InvalidStrategy(format!(
                                "offset at node {} meets or exceeds period length",
                                tree.id(ix)
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl ScenarioTree {
    /// See [`PureStoppingTime::validate`].
    pub fn validate_stopping_time(&self, sigma: &PureStoppingTime) -> Result<()> {
        sigma.validate(self)
    }
}

/// Per-node behavior of a randomized stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    /// Probability of stopping exactly at the grid instant.
    pub atom: f64,
    /// Probability of stopping at `t_k + r·delta`, `r` uniform on `[0, 1]`.
    pub smear: f64,
    /// Smear width; ignored when `smear == 0`.
    pub delta: f64,
}

impl Behavior {
    pub const CONTINUE: Behavior = Behavior { atom: 0.0, smear: 0.0, delta: 0.0 };
    pub const ATOM: Behavior = Behavior { atom: 1.0, smear: 0.0, delta: 0.0 };

    pub fn smear(delta: f64) -> Behavior {
        Behavior { atom: 0.0, smear: 1.0, delta }
    }

    pub fn mixed(atom: f64, smear: f64, delta: f64) -> Behavior {
        Behavior { atom, smear, delta }
    }

    pub fn continue_prob(&self) -> f64 {
        (1.0 - self.atom - self.smear).max(0.0)
    }

    pub fn stops(&self) -> bool {
        self.atom > 0.0 || self.smear > 0.0
    }

    pub fn stops_surely(&self) -> bool {
        self.atom + self.smear >= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedStoppingTime {
    behaviors: Vec<Behavior>,
}

impl RandomizedStoppingTime {
    pub fn from_behaviors(behaviors: Vec<Behavior>) -> Self {
        RandomizedStoppingTime { behaviors }
    }

    pub fn never(tree: &ScenarioTree) -> Self {
        RandomizedStoppingTime { behaviors: vec![Behavior::CONTINUE; tree.len()] }
    }

    pub fn behavior(&self, ix: NodeIx) -> Behavior {
        self.behaviors[ix.0]
    }

    pub fn behaviors(&self) -> &[Behavior] {
        &self.behaviors
    }

    /// True when the strategy never stops.
    pub fn is_never(&self) -> bool {
        self.behaviors.iter().all(|b| !b.stops())
    }

    /// The degenerate randomization of a grid pure stopping time: an atom at
    /// each of its stopping nodes.
    pub fn from_pure(tree: &ScenarioTree, mu: &PureStoppingTime) -> Result<Self> {
        mu.validate(tree)?;
        let mut behaviors = vec![Behavior::CONTINUE; tree.len()];
        for (ix, offset) in mu.stop_nodes(tree) {
            if offset != 0.0 {
                return Err(Error::InvalidStrategy(format!(
                    "stop at node {} is off the grid (offset {}); only grid atoms have a behavioral form",
                    tree.id(ix),
                    offset
                )));
            }
            behaviors[ix.0] = Behavior::ATOM;
        }
        Ok(RandomizedStoppingTime { behaviors })
    }

    /// Stops at `mu + r·delta`: a full smear at every stopping node of `mu`.
    pub fn delta_pure(tree: &ScenarioTree, mu: &PureStoppingTime, delta: f64) -> Result<Self> {
        Self::delta_almost_pure(tree, mu, &[], delta)
    }

    /// Stops exactly at `mu` on the stopping nodes listed in `exact`, and at
    /// `mu + r·delta` on the other stopping nodes of `mu`.
    pub fn delta_almost_pure(
        tree: &ScenarioTree,
        mu: &PureStoppingTime,
        exact: &[NodeIx],
        delta: f64,
    ) -> Result<Self> {
        mu.validate(tree)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let stops = mu.stop_nodes(tree);
        let mut in_exact = vec![false; tree.len()];
        for &ix in exact {
            if !stops.iter().any(|&(s, _)| s == ix) {
                return Err(Error::InvalidStrategy(format!(
                    "node {} is not a stopping node of the underlying stopping time",
                    tree.id(ix)
                )));
            }
            in_exact[ix.0] = true;
        }
        let mut behaviors = vec![Behavior::CONTINUE; tree.len()];
        for (ix, offset) in stops {
            if offset != 0.0 {
                return Err(Error::InvalidStrategy(format!(
                    "underlying stopping time stops off the grid at node {}",
                    tree.id(ix)
                )));
            }
            if in_exact[ix.0] {
                behaviors[ix.0] = Behavior::ATOM;
            } else {
                check_delta(tree, ix, delta)?;
                behaviors[ix.0] = Behavior::smear(delta);
            }
        }
        Ok(RandomizedStoppingTime { behaviors })
    }

    pub fn validate(&self, tree: &ScenarioTree) -> Result<()> {
        if self.behaviors.len() != tree.len() {
            return Err(Error::Mismatch(format!(
                "strategy has {} node slots, tree has {} nodes",
                self.behaviors.len(),
                tree.len()
            )));
        }
        for (ix, b) in self.behaviors.iter().enumerate() {
            let ix = NodeIx(ix);
            let ok = |p: f64| (0.0..=1.0).contains(&p);
            if !ok(b.atom) || !ok(b.smear) || b.atom + b.smear > 1.0 + MASS_TOLERANCE {
                return Err(Error::InvalidStrategy(format!(
                    "stop probabilities at node {} are atom {} and smear {}",
                    tree.id(ix),
                    b.atom,
                    b.smear
                )));
            }
            if b.smear > 0.0 {
                if !(b.delta > 0.0 && b.delta.is_finite()) {
                    return Err(Error::InvalidStrategy(format!(
                        "smear width at node {} must be positive, got {}",
                        tree.id(ix),
                        b.delta
                    )));
                }
                check_delta(tree, ix, b.delta)?;
            }
        }
        Ok(())
    }

    /// The pure stopping time obtained by fixing the player's uniform draw
    /// at `r`. Survival mass is peeled off along each path: at a node the
    /// remaining draw falls into the atom band, the smear band (whose
    /// position inside the band sets the offset), or continues rescaled.
    pub fn sample_section(&self, tree: &ScenarioTree, r: f64) -> Result<PureStoppingTime> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!("section draw must lie in [0, 1], got {r}")));
        }
        if self.behaviors.len() != tree.len() {
            return Err(Error::Mismatch("strategy and tree sizes differ".into()));
        }
        let mut residual = vec![f64::NAN; tree.len()];
        residual[tree.root().0] = r;
        Ok(PureStoppingTime::from_fn(tree, |ix| {
            let q = residual[ix.0];
            let b = self.behaviors[ix.0];
            let total = b.atom + b.smear;
            let action = if b.atom > 0.0 && q < b.atom {
                PureAction::ATOM
            } else if b.smear > 0.0 && (q < total || total >= 1.0) {
                let u = ((q - b.atom) / b.smear).clamp(0.0, 1.0);
                PureAction::Stop { offset: u * b.delta }
            } else if total >= 1.0 {
                PureAction::ATOM
            } else {
                PureAction::Continue
            };
            if !action.is_stop() {
                let next = ((q - total) / (1.0 - total)).clamp(0.0, 1.0);
                for &c in tree.children(ix) {
                    residual[c.0] = next;
                }
            }
            action
        }))
    }
}

fn check_delta(tree: &ScenarioTree, ix: NodeIx, delta: f64) -> Result<()> {
    if let Some(len) = tree.period_length(tree.period_of(ix)) {
        if delta >= len {
            return Err(Error::InvalidParameter(format!(
                "smear width {} at node {} meets or exceeds the period length {}",
                delta,
                tree.id(ix),
                len
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_chain(k: usize) -> ScenarioTree {
        ScenarioTree::chain(&(0..=k).map(|t| t as f64).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stop_everywhere_validates() {
        let t = ScenarioTree::uniform(&[0.0, 1.0, 2.0], 2).unwrap();
        let all: Vec<NodeIx> = t.indices().collect();
        let s = PureStoppingTime::stop_at_nodes(&t, &all);
        assert!(t.validate_stopping_time(&s).is_ok());
        assert_eq!(s.stop_nodes(&t), vec![(t.root(), 0.0)]);
    }

    #[test]
    fn missing_decision_is_reported() {
        let t = unit_chain(2);
        let s = PureStoppingTime::from_decisions(vec![Some(PureAction::Continue), None, None]);
        let err = s.validate(&t).unwrap_err();
        assert!(err.to_string().contains("missing decision at node n1"), "{err}");
    }

    #[test]
    fn offset_must_stay_inside_period() {
        let t = unit_chain(2);
        let s = PureStoppingTime::from_decisions(vec![Some(PureAction::Continue), Some(PureAction::Stop { offset: 1.0 }), None]);
        let err = s.validate(&t).unwrap_err();
        assert!(err.to_string().contains("offset at node n1 meets or exceeds period length"), "{err}");
        // The final period is unbounded.
        let s = PureStoppingTime::from_fn(&t, |ix| if ix.0 == 2 { PureAction::Stop { offset: 3.0 } } else { PureAction::Continue });
        assert!(s.validate(&t).is_ok());
    }

    #[test]
    fn delta_pure_examples() {
        let t = unit_chain(2);
        let mu = PureStoppingTime::stop_at_nodes(&t, &[t.root()]);
        let phi = RandomizedStoppingTime::delta_pure(&t, &mu, 0.5).unwrap();
        assert_eq!(phi.behavior(t.root()), Behavior::smear(0.5));
        assert_eq!(phi.behavior(NodeIx(1)), Behavior::CONTINUE);

        let never = RandomizedStoppingTime::delta_pure(&t, &PureStoppingTime::never(&t), 0.5).unwrap();
        assert!(never.is_never());

        let mid = PureStoppingTime::stop_at_nodes(&t, &[NodeIx(1)]);
        let err = RandomizedStoppingTime::delta_pure(&t, &mid, 1.0).unwrap_err();
        assert!(err.to_string().contains("n1"), "{err}");
    }

    #[test]
    fn delta_almost_pure_degenerate_cases() {
        let t = ScenarioTree::uniform(&[0.0, 1.0, 2.0], 2).unwrap();
        let stops = [t.lookup("r0").unwrap(), t.lookup("r10").unwrap()];
        let mu = PureStoppingTime::stop_at_nodes(&t, &stops);
        let all = RandomizedStoppingTime::delta_almost_pure(&t, &mu, &stops, 0.3).unwrap();
        assert_eq!(all, RandomizedStoppingTime::from_pure(&t, &mu).unwrap());
        let none = RandomizedStoppingTime::delta_almost_pure(&t, &mu, &[], 0.3).unwrap();
        assert_eq!(none, RandomizedStoppingTime::delta_pure(&t, &mu, 0.3).unwrap());
        assert!(RandomizedStoppingTime::delta_almost_pure(&t, &mu, &[t.root()], 0.3).is_err());
    }

    #[test]
    fn sections_of_delta_pure() {
        let t = unit_chain(2);
        let mu = PureStoppingTime::stop_at_nodes(&t, &[t.root()]);
        let phi = RandomizedStoppingTime::delta_pure(&t, &mu, 0.5).unwrap();
        let s0 = phi.sample_section(&t, 0.0).unwrap();
        assert_eq!(s0.decision(t.root()), Some(PureAction::ATOM));
        let s1 = phi.sample_section(&t, 1.0).unwrap();
        assert_eq!(s1.decision(t.root()), Some(PureAction::Stop { offset: 0.5 }));
        let sh = phi.sample_section(&t, 0.5).unwrap();
        assert_eq!(sh.decision(t.root()), Some(PureAction::Stop { offset: 0.25 }));
        assert!(phi.sample_section(&t, 1.5).is_err());
    }

    #[test]
    fn sections_split_mass_across_periods() {
        let t = unit_chain(2);
        let mut b = vec![Behavior::CONTINUE; 3];
        b[0] = Behavior::mixed(0.25, 0.25, 0.5);
        b[1] = Behavior::ATOM;
        let phi = RandomizedStoppingTime::from_behaviors(b);
        phi.validate(&t).unwrap();
        let at = |r: f64| phi.sample_section(&t, r).unwrap().stop_on_path(&t, NodeIx(2)).1;
        assert_eq!(at(0.1), Instant::grid(0));
        assert_eq!(at(0.375), Instant::At { period: 0, offset: 0.25 });
        assert_eq!(at(0.9), Instant::grid(1));
    }

    #[test]
    fn randomized_validation() {
        let t = unit_chain(1);
        let bad = RandomizedStoppingTime::from_behaviors(vec![Behavior::mixed(0.7, 0.7, 0.1), Behavior::CONTINUE]);
        assert!(bad.validate(&t).is_err());
        let wide = RandomizedStoppingTime::from_behaviors(vec![Behavior::smear(1.0), Behavior::CONTINUE]);
        assert!(wide.validate(&t).is_err());
        let last = RandomizedStoppingTime::from_behaviors(vec![Behavior::CONTINUE, Behavior::smear(10.0)]);
        assert!(last.validate(&t).is_ok());
    }
}
