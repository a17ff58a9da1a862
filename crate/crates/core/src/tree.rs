//! Finite filtered probability space.
//!
//! A [`ScenarioTree`] stands in for a filtered probability space: a node at
//! period `k` is an atom of the information available at grid time `t_k`,
//! and the leaves (all at the last period `K`) are the elementary outcomes.
//! Payoff processes on the tree are step functions, constant on
//! `[t_k, t_{k+1})` along each path. The last period is unbounded: after
//! `t_K` no new information arrives and payoffs stay frozen forever.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when checking that branch probabilities sum to one.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Index of a node inside a [`ScenarioTree`]. Parents always precede their
/// children, so iterating indices in reverse is a valid backward sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIx(pub usize);

impl fmt::Display for NodeIx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub period: usize,
    pub parent: Option<NodeIx>,
    /// Probability of moving from the parent to this node (1 for the root).
    pub branch_prob: f64,
    pub children: Vec<NodeIx>,
}

/// A point on the extended time axis: a grid period plus an offset inside
/// it, or the never-stop sentinel. Ordering is lexicographic, so instants
/// on one path compare exactly without summing floats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Instant {
    At { period: usize, offset: f64 },
    Never,
}

impl Instant {
    pub fn grid(period: usize) -> Self {
        Instant::At { period, offset: 0.0 }
    }

    pub fn is_never(&self) -> bool {
        matches!(self, Instant::Never)
    }

    /// Real time of the instant, `None` for the sentinel.
    pub fn time(&self, tree: &ScenarioTree) -> Option<f64> {
        match *self {
            Instant::At { period, offset } => Some(tree.time(period) + offset),
            Instant::Never => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    time_grid: Vec<f64>,
    nodes: Vec<Node>,
    path_prob: Vec<f64>,
    index: HashMap<String, NodeIx>,
    by_period: Vec<Vec<NodeIx>>,
}

/// One node entry of a tree description document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    #[serde(deserialize_with = "de_node_id")]
    pub id: String,
    pub period: usize,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "de_opt_node_id")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

/// Tree description document: `{ "time_grid": [...], "nodes": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub time_grid: Vec<f64>,
    pub nodes: Vec<NodeDoc>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdRepr {
    Str(String),
    Int(i64),
}

impl From<IdRepr> for String {
    fn from(r: IdRepr) -> String {
        match r {
            IdRepr::Str(s) => s,
            IdRepr::Int(i) => i.to_string(),
        }
    }
}

pub(crate) fn de_node_id<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    IdRepr::deserialize(d).map(String::from)
}

pub(crate) fn de_opt_node_id<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<String>, D::Error> {
    Option::<IdRepr>::deserialize(d).map(|o| o.map(String::from))
}

impl ScenarioTree {
    /// Builds and validates a tree from its description document.
    pub fn build(doc: &TreeDoc) -> Result<Self> {
        let grid = &doc.time_grid;
        if grid.is_empty() {
            return Err(Error::InvalidTree("time_grid is empty".into()));
        }
        if let Some(t) = grid.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidTree(format!("time_grid contains non-finite value {t}")));
        }
        for w in grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidTree(format!(
                    "time_grid is not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        let last = grid.len() - 1;

        let mut by_id: HashMap<&str, usize> = HashMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            if by_id.insert(n.id.as_str(), i).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id {}", n.id)));
            }
            if n.period > last {
                return Err(Error::InvalidTree(format!(
                    "node {} has period {} beyond the last grid period {}",
                    n.id, n.period, last
                )));
            }
        }

        let roots: Vec<usize> = (0..doc.nodes.len())
            .filter(|&i| doc.nodes[i].parent.is_none())
            .collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::InvalidTree("no root node".into())),
            _ => {
                return Err(Error::InvalidTree(format!(
                    "more than one root: {}",
                    roots.iter().map(|&i| doc.nodes[i].id.as_str()).collect::<Vec<_>>().join(", ")
                )))
            }
        };
        if doc.nodes[root].period != 0 {
            return Err(Error::InvalidTree(format!(
                "root {} must be at period 0",
                doc.nodes[root].id
            )));
        }

        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); doc.nodes.len()];
        for (i, n) in doc.nodes.iter().enumerate() {
            let Some(p) = &n.parent else { continue };
            let &pi = by_id
                .get(p.as_str())
                .ok_or_else(|| Error::InvalidTree(format!("node {} has unknown parent {}", n.id, p)))?;
            if doc.nodes[pi].period + 1 != n.period {
                return Err(Error::InvalidTree(format!(
                    "node {} at period {} has parent {} at period {}",
                    n.id, n.period, p, doc.nodes[pi].period
                )));
            }
            let prob = n.prob.unwrap_or(1.0);
            if !(prob > 0.0 && prob <= 1.0) {
                return Err(Error::InvalidTree(format!(
                    "branch probability of node {} is {}, expected a value in (0, 1]",
                    n.id, prob
                )));
            }
            kids[pi].push(i);
        }

        // Breadth-first relabelling; parents precede children.
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            order.extend_from_slice(&kids[i]);
        }
        if order.len() != doc.nodes.len() {
            return Err(Error::InvalidTree("some nodes are not reachable from the root".into()));
        }
        let mut new_ix = vec![0usize; doc.nodes.len()];
        for (k, &i) in order.iter().enumerate() {
            new_ix[i] = k;
        }

        let mut nodes = Vec::with_capacity(order.len());
        for &i in &order {
            let n = &doc.nodes[i];
            nodes.push(Node {
                id: n.id.clone(),
                period: n.period,
                parent: n.parent.as_ref().map(|p| NodeIx(new_ix[by_id[p.as_str()]])),
                branch_prob: if n.parent.is_none() { 1.0 } else { n.prob.unwrap_or(1.0) },
                children: kids[i].iter().map(|&c| NodeIx(new_ix[c])).collect(),
            });
        }

        for n in &nodes {
            if n.period < last && n.children.is_empty() {
                return Err(Error::InvalidTree(format!(
                    "node {} at period {} has no children but the horizon is period {}",
                    n.id, n.period, last
                )));
            }
            if !n.children.is_empty() {
                let sum: f64 = n.children.iter().map(|c| nodes[c.0].branch_prob).sum();
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    return Err(Error::InvalidTree(format!(
                        "children of node {} sum to {} \u{2260} 1",
                        n.id, sum
                    )));
                }
            }
        }

        let mut path_prob = vec![1.0; nodes.len()];
        for k in 1..nodes.len() {
            let p = nodes[k].parent.expect("non-root has parent");
            path_prob[k] = path_prob[p.0] * nodes[k].branch_prob;
        }
        let mut by_period = vec![Vec::new(); last + 1];
        for (k, n) in nodes.iter().enumerate() {
            by_period[n.period].push(NodeIx(k));
        }
        let index = nodes.iter().enumerate().map(|(k, n)| (n.id.clone(), NodeIx(k))).collect();

        Ok(ScenarioTree { time_grid: grid.clone(), nodes, path_prob, index, by_period })
    }

    /// Parses a JSON tree description and builds the tree.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::build(&doc)
    }

    pub fn to_doc(&self) -> TreeDoc {
        TreeDoc {
            time_grid: self.time_grid.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.clone(),
                    period: n.period,
                    parent: n.parent.map(|p| self.nodes[p.0].id.clone()),
                    prob: n.parent.map(|_| n.branch_prob),
                })
                .collect(),
        }
    }

    /// A single-path tree on the given grid (deterministic filtration).
    /// Node ids are `n0`, `n1`, ...
    pub fn chain(time_grid: &[f64]) -> Result<Self> {
        let nodes = (0..time_grid.len())
            .map(|k| NodeDoc {
                id: format!("n{k}"),
                period: k,
                parent: k.checked_sub(1).map(|p| format!("n{p}")),
                prob: None,
            })
            .collect();
        Self::build(&TreeDoc { time_grid: time_grid.to_vec(), nodes })
    }

    /// A complete tree where every non-terminal node has `branching`
    /// equally likely children. Node ids encode the path: `r`, `r0`, `r01`, ...
    pub fn uniform(time_grid: &[f64], branching: usize) -> Result<Self> {
        if branching == 0 {
            return Err(Error::InvalidTree("branching must be positive".into()));
        }
        let mut nodes = vec![NodeDoc { id: "r".into(), period: 0, parent: None, prob: None }];
        let mut frontier = vec!["r".to_string()];
        for k in 1..time_grid.len() {
            let mut next = Vec::new();
            for p in &frontier {
                for j in 0..branching {
                    let id = format!("{p}{j}");
                    nodes.push(NodeDoc {
                        id: id.clone(),
                        period: k,
                        parent: Some(p.clone()),
                        prob: Some(1.0 / branching as f64),
                    });
                    next.push(id);
                }
            }
            frontier = next;
        }
        Self::build(&TreeDoc { time_grid: time_grid.to_vec(), nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeIx {
        NodeIx(0)
    }

    /// Index of the last period `K`.
    pub fn last_period(&self) -> usize {
        self.time_grid.len() - 1
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn time(&self, period: usize) -> f64 {
        self.time_grid[period]
    }

    /// Length of period `k`; `None` for the final, unbounded period.
    pub fn period_length(&self, period: usize) -> Option<f64> {
        (period < self.last_period()).then(|| self.time_grid[period + 1] - self.time_grid[period])
    }

    /// Smallest grid spacing; `None` for a single-period tree.
    pub fn min_period_length(&self) -> Option<f64> {
        self.time_grid.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeIx, &Node)> {
        self.nodes.iter().enumerate().map(|(k, n)| (NodeIx(k), n))
    }

    pub fn indices(&self) -> impl DoubleEndedIterator<Item = NodeIx> + ExactSizeIterator {
        (0..self.nodes.len()).map(NodeIx)
    }

    pub fn period_of(&self, ix: NodeIx) -> usize {
        self.nodes[ix.0].period
    }

    pub fn children(&self, ix: NodeIx) -> &[NodeIx] {
        &self.nodes[ix.0].children
    }

    pub fn parent(&self, ix: NodeIx) -> Option<NodeIx> {
        self.nodes[ix.0].parent
    }

    pub fn is_leaf(&self, ix: NodeIx) -> bool {
        self.nodes[ix.0].children.is_empty()
    }

    pub fn nodes_at(&self, period: usize) -> &[NodeIx] {
        &self.by_period[period]
    }

    pub fn leaves(&self) -> &[NodeIx] {
        &self.by_period[self.last_period()]
    }

    pub fn lookup(&self, id: &str) -> Result<NodeIx> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn id(&self, ix: NodeIx) -> &str {
        &self.nodes[ix.0].id
    }

    /// Path from the root down to `ix`, inclusive.
    pub fn path_to(&self, ix: NodeIx) -> Vec<NodeIx> {
        let mut path = vec![ix];
        let mut cur = ix;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Whether `anc` lies on the path from the root to `ix` (inclusive).
    pub fn is_ancestor_or_self(&self, anc: NodeIx, ix: NodeIx) -> bool {
        let mut cur = Some(ix);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            if self.period_of(c) <= self.period_of(anc) {
                return false;
            }
            cur = self.parent(c);
        }
        false
    }

    /// Unconditional probability of the atom `ix`: the product of branch
    /// probabilities along its path.
    pub fn node_probability(&self, ix: NodeIx) -> f64 {
        self.path_prob[ix.0]
    }

    /// Same as [`node_probability`](Self::node_probability), keyed by id.
    pub fn node_probability_of(&self, id: &str) -> Result<f64> {
        self.lookup(id).map(|ix| self.node_probability(ix))
    }

    /// Branch-probability weighted average of the children's entries of a
    /// node-indexed slice.
    pub fn expect_children(&self, ix: NodeIx, values: &[f64]) -> f64 {
        self.children(ix).iter().map(|&c| self.nodes[c.0].branch_prob * values[c.0]).sum()
    }

    /// One-step conditional expectation: maps values on period `k + 1` to
    /// their conditional means on period `k`.
    pub fn conditional_expectation(&self, values: &NodeValues, target_period: usize) -> Result<NodeValues> {
        if target_period >= self.last_period() {
            return Err(Error::InvalidParameter(format!(
                "target period {} has no successor period (last period is {})",
                target_period,
                self.last_period()
            )));
        }
        values.check_tree(self)?;
        let mut out = NodeValues::empty(self);
        for &ix in self.nodes_at(target_period) {
            let mut acc = 0.0;
            for &c in self.children(ix) {
                let v = values
                    .get(c)
                    .ok_or_else(|| Error::InvalidParameter(format!("missing value at child {}", self.id(c))))?;
                acc += self.nodes[c.0].branch_prob * v;
            }
            out.set(ix, acc);
        }
        Ok(out)
    }
}

/// Partial map from nodes to reals. Operations state which part of the tree
/// (one period, or all of it) they need to be populated.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValues {
    values: Vec<Option<f64>>,
}

impl NodeValues {
    pub fn empty(tree: &ScenarioTree) -> Self {
        NodeValues { values: vec![None; tree.len()] }
    }

    /// Values defined on every node.
    pub fn total(values: Vec<f64>) -> Self {
        NodeValues { values: values.into_iter().map(Some).collect() }
    }

    /// Values for the nodes of one period, in [`ScenarioTree::nodes_at`] order.
    pub fn on_period(tree: &ScenarioTree, period: usize, values: &[f64]) -> Result<Self> {
        let nodes = tree.nodes_at(period);
        if nodes.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "period {} has {} nodes, got {} values",
                period,
                nodes.len(),
                values.len()
            )));
        }
        let mut out = Self::empty(tree);
        for (&ix, &v) in nodes.iter().zip(values) {
            out.set(ix, v);
        }
        Ok(out)
    }

    pub fn get(&self, ix: NodeIx) -> Option<f64> {
        self.values.get(ix.0).copied().flatten()
    }

    pub fn set(&mut self, ix: NodeIx, v: f64) {
        self.values[ix.0] = Some(v);
    }

    /// Values for the nodes of one period, in [`ScenarioTree::nodes_at`] order.
    pub fn period_values(&self, tree: &ScenarioTree, period: usize) -> Result<Vec<f64>> {
        tree.nodes_at(period)
            .iter()
            .map(|&ix| self.get(ix).ok_or_else(|| Error::InvalidParameter(format!("missing value at {}", tree.id(ix)))))
            .collect()
    }

    fn check_tree(&self, tree: &ScenarioTree) -> Result<()> {
        if self.values.len() != tree.len() {
            return Err(Error::Mismatch(format!(
                "node values sized for {} nodes, tree has {}",
                self.values.len(),
                tree.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, period: usize, parent: Option<&str>, prob: Option<f64>) -> NodeDoc {
        NodeDoc { id: id.into(), period, parent: parent.map(Into::into), prob }
    }

    #[test]
    fn chain_is_deterministic() {
        let t = ScenarioTree::chain(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.len(), 3);
        for ix in t.indices() {
            assert_eq!(t.node_probability(ix), 1.0);
        }
    }

    #[test]
    fn binary_tree_builds() {
        let doc = TreeDoc {
            time_grid: vec![0.0, 1.0],
            nodes: vec![
                node("root", 0, None, None),
                node("up", 1, Some("root"), Some(0.5)),
                node("down", 1, Some("root"), Some(0.5)),
            ],
        };
        let t = ScenarioTree::build(&doc).unwrap();
        assert_eq!(t.leaves().len(), 2);
        assert_eq!(t.node_probability_of("up").unwrap(), 0.5);
        assert_eq!(t.node_probability_of("root").unwrap(), 1.0);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let doc = TreeDoc {
            time_grid: vec![0.0, 1.0],
            nodes: vec![
                node("root", 0, None, None),
                node("up", 1, Some("root"), Some(0.6)),
                node("down", 1, Some("root"), Some(0.3)),
            ],
        };
        let err = ScenarioTree::build(&doc).unwrap_err();
        assert!(err.to_string().contains("children of node root sum to 0.8999"), "{err}");
    }

    #[test]
    fn grandchild_probability_is_product() {
        let doc = TreeDoc {
            time_grid: vec![0.0, 1.0, 2.0],
            nodes: vec![
                node("r", 0, None, None),
                node("a", 1, Some("r"), Some(0.5)),
                node("b", 1, Some("r"), Some(0.5)),
                node("a0", 2, Some("a"), Some(0.25)),
                node("a1", 2, Some("a"), Some(0.75)),
                node("b0", 2, Some("b"), None),
            ],
        };
        let t = ScenarioTree::build(&doc).unwrap();
        assert_eq!(t.node_probability_of("a0").unwrap(), 0.125);
        assert!(matches!(t.node_probability_of("zz"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn rejects_structural_errors() {
        let bad_grid = TreeDoc { time_grid: vec![0.0, 0.0], nodes: vec![node("r", 0, None, None)] };
        assert!(ScenarioTree::build(&bad_grid).is_err());

        let short_path = TreeDoc { time_grid: vec![0.0, 1.0], nodes: vec![node("r", 0, None, None)] };
        assert!(ScenarioTree::build(&short_path).is_err());

        let skip = TreeDoc {
            time_grid: vec![0.0, 1.0, 2.0],
            nodes: vec![node("r", 0, None, None), node("x", 2, Some("r"), None)],
        };
        assert!(ScenarioTree::build(&skip).is_err());

        let two_roots = TreeDoc {
            time_grid: vec![0.0],
            nodes: vec![node("r", 0, None, None), node("s", 0, None, None)],
        };
        assert!(ScenarioTree::build(&two_roots).is_err());
    }

    #[test]
    fn conditional_expectation_examples() {
        let t = ScenarioTree::uniform(&[0.0, 1.0], 2).unwrap();
        let v = NodeValues::on_period(&t, 1, &[2.0, 4.0]).unwrap();
        let ce = t.conditional_expectation(&v, 0).unwrap();
        assert_eq!(ce.get(t.root()), Some(3.0));

        let c = ScenarioTree::chain(&[0.0, 1.0]).unwrap();
        let v = NodeValues::on_period(&c, 1, &[7.0]).unwrap();
        assert_eq!(c.conditional_expectation(&v, 0).unwrap().get(c.root()), Some(7.0));

        let doc = TreeDoc {
            time_grid: vec![0.0, 1.0],
            nodes: vec![
                node("r", 0, None, None),
                node("lo", 1, Some("r"), Some(0.25)),
                node("hi", 1, Some("r"), Some(0.75)),
            ],
        };
        let t = ScenarioTree::build(&doc).unwrap();
        let mut v = NodeValues::empty(&t);
        v.set(t.lookup("lo").unwrap(), 0.0);
        v.set(t.lookup("hi").unwrap(), 4.0);
        assert_eq!(t.conditional_expectation(&v, 0).unwrap().get(t.root()), Some(3.0));

        let missing = NodeValues::empty(&t);
        assert!(t.conditional_expectation(&missing, 0).is_err());
    }

    #[test]
    fn instants_order_lexicographically() {
        assert!(Instant::At { period: 0, offset: 0.99 } < Instant::grid(1));
        assert!(Instant::grid(5) < Instant::Never);
        assert!(Instant::At { period: 2, offset: 0.1 } > Instant::grid(2));
    }

    #[test]
    fn numeric_ids_are_accepted() {
        let t = ScenarioTree::from_json(
            r#"{"time_grid":[0,1],"nodes":[{"id":0,"period":0},{"id":1,"period":1,"parent":0}]}"#,
        )
        .unwrap();
        assert_eq!(t.id(t.root()), "0");
        assert!(matches!(ScenarioTree::from_json("{"), Err(Error::Parse(_))));
    }
}
