//! JSON documents for games and strategies.
//!
//! Game file:
//!
//! ```json
//! { "version": 1, "time_grid": [0, 1, 2],
//!   "nodes": [ {"id": "n0", "period": 0, "a": 1, "b": 1, "c": 0},
//!              {"id": "n1", "period": 1, "parent": "n0", "prob": 1, "a": 1, "b": 1, "c": 0, "chi": 2} ],
//!   "M": 5, "never_stop_payoff": 0 }
//! ```
//!
//! `chi` may appear only on terminal nodes (and then on all of them); `rate`
//! on all nodes or none. Strategy file:
//!
//! ```json
//! { "nodes": [ {"id": "n0", "action": "smear", "delta": 0.25},
//!              {"id": "n1", "action": "mixed", "prob_atom": 0.5, "prob_smear": 0.25, "delta": 0.1} ] }
//! ```
//!
//! Omitted nodes continue. `atom` defaults `prob_atom` to 1 and `smear`
//! defaults `prob_smear` to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, Payoff};
use crate::strategy::{Behavior, RandomizedStoppingTime};
use crate::tree::{de_node_id, de_opt_node_id, NodeDoc, ScenarioTree, TreeDoc};

pub const GAME_FORMAT_VERSION: u32 = 1;

fn default_version() -> u32 {
    GAME_FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameNodeDoc {
    #[serde(deserialize_with = "de_node_id")]
    pub id: String,
    pub period: usize,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "de_opt_node_id")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub time_grid: Vec<f64>,
    pub nodes: Vec<GameNodeDoc>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub never_stop_payoff: Option<f64>,
}

impl GameDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game document serializes")
    }

    pub fn into_game(self) -> Result<GameSpec> {
        if self.version != GAME_FORMAT_VERSION {
            return Err(Error::InvalidGame(format!("unsupported game format version {}", self.version)));
        }
        let tree = ScenarioTree::build(&TreeDoc {
            time_grid: self.time_grid.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc { id: n.id.clone(), period: n.period, parent: n.parent.clone(), prob: n.prob })
                .collect(),
        })?;
        let len = tree.len();
        let mut payoffs = vec![Payoff::constant(0.0); len];
        let mut chi = vec![f64::NAN; len];
        let mut rate = vec![f64::NAN; len];
        let (mut any_chi, mut any_rate) = (false, false);
        for n in &self.nodes {
            let ix = tree.lookup(&n.id)?;
            payoffs[ix.0] = Payoff::new(n.a, n.b, n.c);
            if let Some(x) = n.chi {
                if !tree.is_leaf(ix) {
                    return Err(Error::InvalidGame(format!("chi given on non-terminal node {}", n.id)));
                }
                chi[ix.0] = x;
                any_chi = true;
            }
            if let Some(x) = n.rate {
                rate[ix.0] = x;
                any_rate = true;
            }
        }
        let mut b = GameSpec::builder(tree, payoffs);
        if any_chi {
            b = b.chi(chi);
        }
        if any_rate {
            b = b.rate(rate);
        }
        if let Some(m) = self.bound {
            b = b.bound(m);
        }
        if let Some(v) = self.never_stop_payoff {
            b = b.never_stop_payoff(v);
        }
        b.build()
    }

    pub fn from_game(game: &GameSpec) -> Self {
        let tree = game.tree();
        let tdoc = tree.to_doc();
        let nodes = tdoc
            .nodes
            .into_iter()
            .zip(tree.indices())
            .map(|(n, ix)| {
                let p = game.payoff(ix);
                GameNodeDoc {
                    id: n.id,
                    period: n.period,
                    parent: n.parent,
                    prob: n.prob,
                    a: p.a,
                    b: p.b,
                    c: p.c,
                    rate: game.rate(ix),
                    chi: if tree.is_leaf(ix) { game.chi(ix) } else { None },
                }
            })
            .collect();
        GameDoc {
            version: GAME_FORMAT_VERSION,
            time_grid: tdoc.time_grid,
            nodes,
            bound: Some(game.bound()),
            never_stop_payoff: Some(game.never_stop_payoff()),
        }
    }
}

/// Parses a game document and builds the game.
pub fn parse_game(text: &str) -> Result<GameSpec> {
    GameDoc::parse(text)?.into_game()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionDoc {
    Continue,
    Atom,
    Smear,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyNodeDoc {
    #[serde(deserialize_with = "de_node_id")]
    pub id: String,
    pub action: ActionDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob_atom: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob_smear: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDoc {
    pub nodes: Vec<StrategyNodeDoc>,
}

impl StrategyDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("strategy document serializes")
    }

    pub fn into_strategy(&self, tree: &ScenarioTree) -> Result<RandomizedStoppingTime> {
        let mut behaviors = vec![Behavior::CONTINUE; tree.len()];
        let mut seen = vec![false; tree.len()];
        for n in &self.nodes {
            let ix = tree.lookup(&n.id)?;
            if std::mem::replace(&mut seen[ix.0], true) {
                return Err(Error::InvalidStrategy(format!("node {} listed twice", n.id)));
            }
            let need_delta = || {
                n.delta.ok_or_else(|| Error::InvalidStrategy(format!("node {} smears but has no delta", n.id)))
            };
            behaviors[ix.0] = match n.action {
                ActionDoc::Continue => Behavior::CONTINUE,
                ActionDoc::Atom => {
                    if n.prob_smear.unwrap_or(0.0) != 0.0 {
                        return Err(Error::InvalidStrategy(format!(
                            "node {} has action atom but a smear probability; use mixed",
                            n.id
                        )));
                    }
                    Behavior::mixed(n.prob_atom.unwrap_or(1.0), 0.0, 0.0)
                }
                ActionDoc::Smear => {
                    if n.prob_atom.unwrap_or(0.0) != 0.0 {
                        return Err(Error::InvalidStrategy(format!(
                            "node {} has action smear but an atom probability; use mixed",
                            n.id
                        )));
                    }
                    Behavior::mixed(0.0, n.prob_smear.unwrap_or(1.0), need_delta()?)
                }
                ActionDoc::Mixed => {
                    let ps = n.prob_smear.unwrap_or(0.0);
                    let delta = if ps > 0.0 { need_delta()? } else { n.delta.unwrap_or(0.0) };
                    Behavior::mixed(n.prob_atom.unwrap_or(0.0), ps, delta)
                }
            };
        }
        let s = RandomizedStoppingTime::from_behaviors(behaviors);
        s.validate(tree)?;
        Ok(s)
    }

    /// Lists every node with a nonzero stop probability.
    pub fn from_strategy(tree: &ScenarioTree, s: &RandomizedStoppingTime) -> Self {
        let nodes = tree
            .indices()
            .filter_map(|ix| {
                let b = s.behavior(ix);
                let id = tree.id(ix).to_string();
                match (b.atom > 0.0, b.smear > 0.0) {
                    (false, false) => None,
                    (true, false) => Some(StrategyNodeDoc {
                        id,
                        action: ActionDoc::Atom,
                        prob_atom: (b.atom != 1.0).then_some(b.atom),
                        prob_smear: None,
                        delta: None,
                    }),
                    (false, true) => Some(StrategyNodeDoc {
                        id,
                        action: ActionDoc::Smear,
                        prob_atom: None,
                        prob_smear: (b.smear != 1.0).then_some(b.smear),
                        delta: Some(b.delta),
                    }),
                    (true, true) => Some(StrategyNodeDoc {
                        id,
                        action: ActionDoc::Mixed,
                        prob_atom: Some(b.atom),
                        prob_smear: Some(b.smear),
                        delta: Some(b.delta),
                    }),
                }
            })
            .collect();
        StrategyDoc { nodes }
    }
}

/// Parses a strategy document against a tree.
pub fn parse_strategy(text: &str, tree: &ScenarioTree) -> Result<RandomizedStoppingTime> {
    StrategyDoc::parse(text)?.into_strategy(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G1: &str = r#"{
        "version": 1, "time_grid": [0, 1, 2],
        "nodes": [
            {"id": "n0", "period": 0, "a": 1, "b": 1, "c": 0},
            {"id": "n1", "period": 1, "parent": "n0", "a": 1, "b": 1, "c": 0},
            {"id": "n2", "period": 2, "parent": "n1", "a": 1, "b": 1, "c": 0}
        ]
    }"#;

    #[test]
    fn game_document_round_trip() {
        let g = parse_game(G1).unwrap();
        assert_eq!(g.tree().len(), 3);
        assert_eq!(g.bound(), 1.0);
        let again = GameDoc::parse(&GameDoc::from_game(&g).to_json()).unwrap().into_game().unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn game_document_errors() {
        assert!(parse_game("{not json").unwrap_err().is_parse());
        let v2 = G1.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(parse_game(&v2), Err(Error::InvalidGame(_))));
        let chi_inner = G1.replace(r#""id": "n1", "period": 1, "parent": "n0","#, r#""id": "n1", "period": 1, "parent": "n0", "chi": 1,"#);
        assert!(parse_game(&chi_inner).is_err());
        let low_m = G1.replace("\"version\": 1,", "\"version\": 1, \"M\": 0.5,");
        assert!(parse_game(&low_m).is_err());
    }

    #[test]
    fn strategy_document() {
        let g = parse_game(G1).unwrap();
        let s = parse_strategy(r#"{"nodes": [{"id": "n0", "action": "smear", "delta": 0.25}]}"#, g.tree()).unwrap();
        assert_eq!(s.behavior(g.tree().root()), Behavior::smear(0.25));
        let doc = StrategyDoc::from_strategy(g.tree(), &s);
        assert_eq!(doc.into_strategy(g.tree()).unwrap(), s);

        let m = parse_strategy(
            r#"{"nodes": [{"id": "n1", "action": "mixed", "prob_atom": 0.5, "prob_smear": 0.25, "delta": 0.1}]}"#,
            g.tree(),
        )
        .unwrap();
        assert_eq!(m.behavior(g.tree().lookup("n1").unwrap()), Behavior::mixed(0.5, 0.25, 0.1));

        assert!(parse_strategy(r#"{"nodes": [{"id": "n0", "action": "smear"}]}"#, g.tree()).is_err());
        assert!(parse_strategy(r#"{"nodes": [{"id": "zz", "action": "atom"}]}"#, g.tree()).is_err());
        assert!(parse_strategy(r#"{"nodes": [{"id": "n0", "action": "jump"}]}"#, g.tree()).unwrap_err().is_parse());
        assert!(parse_strategy(r#"{"nodes": [{"id": "n0", "action": "smear", "delta": 1.0}]}"#, g.tree()).is_err());
    }
}
