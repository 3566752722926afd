use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::distribution::LabelDistribution;
use crate::error::{Error, Result};
use crate::mrf::{normalize_edge, Edge, Mrf, NodeId};

use super::MethodTag;

/// Node and edge selection of an explaining subgraph.
///
/// For subgraphs grown by the search, `nodes` is in insertion order (target
/// first) and `edges[i]` is the edge that attached `nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub target: NodeId,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<Edge>,
    /// End-points whose own prior best explained what they emit; never extended.
    pub closed_endpoints: Vec<NodeId>,
}

impl Subgraph {
    pub fn singleton(target: NodeId) -> Self {
        Self {
            target,
            nodes: vec![target],
            edges: Vec::new(),
            closed_endpoints: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains(&id)
    }

    pub fn is_closed(&self, id: NodeId) -> bool {
        self.closed_endpoints.binary_search(&id).is_ok()
    }

    pub(crate) fn close(&mut self, id: NodeId) {
        if let Err(pos) = self.closed_endpoints.binary_search(&id) {
            self.closed_endpoints.insert(pos, id);
        }
    }

    pub fn last_added(&self) -> NodeId {
        *self.nodes.last().unwrap_or(&self.target)
    }

    pub fn sorted_nodes(&self) -> Vec<NodeId> {
        let mut v = self.nodes.clone();
        v.sort_unstable();
        v
    }

    pub fn sorted_edges(&self) -> Vec<Edge> {
        let mut v: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(a, b)| normalize_edge(a, b))
            .collect();
        v.sort_unstable();
        v
    }

    /// Attaches `node` through `edge`; the caller guarantees `node` is new.
    pub fn extended(&self, node: NodeId, edge: Edge) -> Subgraph {
        let mut next = self.clone();
        next.nodes.push(node);
        next.edges.push(normalize_edge(edge.0, edge.1));
        next
    }

    /// The node through which `node` was attached. `None` for the target or
    /// for nodes not in the subgraph.
    pub fn parent_of(&self, node: NodeId) -> Option<NodeId> {
        let pos = self.nodes.iter().position(|&n| n == node)?;
        if pos == 0 {
            return None;
        }
        let (a, b) = *self.edges.get(pos - 1)?;
        Some(if a == node { b } else { a })
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.nodes.first() else {
            return false;
        };
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> =
            self.nodes.iter().map(|&n| (n, Vec::new())).collect();
        for &(a, b) in &self.edges {
            match (adj.contains_key(&a), adj.contains_key(&b)) {
                (true, true) => {
                    adj.get_mut(&a).unwrap().push(b);
                    adj.get_mut(&b).unwrap().push(a);
                }
                _ => return false,
            }
        }
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[&u] {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen.len() == adj.len()
    }

    /// Connected with exactly `|nodes| - 1` distinct edges.
    pub fn is_tree(&self) -> bool {
        let distinct_nodes: BTreeSet<_> = self.nodes.iter().collect();
        distinct_nodes.len() == self.nodes.len()
            && self.sorted_edges().windows(2).all(|w| w[0] != w[1])
            && self.edges.len() + 1 == self.nodes.len()
            && self.is_connected()
    }

    /// Checks that the subgraph lives inside `mrf` and contains its target.
    pub fn validate_against(&self, mrf: &Mrf) -> Result<()> {
        if !self.contains(self.target) {
            return Err(Error::InvalidSubgraph(format!(
                "target {} is not among the nodes",
                self.target
            )));
        }
        for &n in &self.nodes {
            if !mrf.contains(n) {
                return Err(Error::UnknownNode(n));
            }
        }
        for &(a, b) in &self.edges {
            if !self.contains(a) || !self.contains(b) {
                return Err(Error::EdgeOutsideNodeSet(a, b));
            }
            if !mrf.has_edge(a, b) {
                return Err(Error::NotAnEdge(a, b));
            }
        }
        Ok(())
    }

    /// Deterministic ordering used to break objective ties: smaller sorted
    /// node-id sequence first, then smaller sorted edge sequence.
    pub fn tie_break(&self, other: &Self) -> Ordering {
        self.sorted_nodes()
            .cmp(&other.sorted_nodes())
            .then_with(|| self.sorted_edges().cmp(&other.sorted_edges()))
    }

    /// Identity of the selected structure, ignoring insertion order.
    pub(crate) fn structure_key(&self) -> (Vec<NodeId>, Vec<Edge>) {
        (self.sorted_nodes(), self.sorted_edges())
    }
}

/// Scores closer than this are treated as equal when ranking. Candidates
/// that are mathematically tied can differ in the last bits because BP
/// multiplies messages in a node-order-dependent sequence.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Sorts ascending by score. Repeatedly takes the smallest remaining score
/// and, among all items within [`TIE_TOLERANCE`] of it, emits the one that
/// comes first under [`Subgraph::tie_break`].
pub(crate) fn sort_ranked<T>(
    items: &mut [T],
    score: impl Fn(&T) -> f64,
    sub: impl Fn(&T) -> &Subgraph,
) {
    items.sort_by(|a, b| {
        score(a)
            .total_cmp(&score(b))
            .then_with(|| sub(a).tie_break(sub(b)))
    });
    for start in 0..items.len() {
        let limit = score(&items[start]) + TIE_TOLERANCE;
        let band = items[start..]
            .iter()
            .take_while(|x| score(x) <= limit)
            .count();
        let best = (start..start + band)
            .min_by(|&i, &j| sub(&items[i]).tie_break(sub(&items[j])))
            .expect("band holds at least the first item");
        items[start..=best].rotate_right(1);
    }
}

/// An evaluated explanation: the subgraph, the target's belief computed on it
/// and its distance to the full-model belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSubgraph {
    #[serde(flatten)]
    pub subgraph: Subgraph,
    pub belief_on_subgraph: LabelDistribution,
    /// Symmetric KL divergence between full-model and subgraph beliefs.
    pub objective: f64,
    pub method: MethodTag,
}

impl ExplanationSubgraph {
    pub fn target(&self) -> NodeId {
        self.subgraph.target
    }

    pub fn size(&self) -> usize {
        self.subgraph.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u64) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn parent_tracking_follows_insertion() {
        let s = Subgraph::singleton(n(5))
            .extended(n(2), (n(5), n(2)))
            .extended(n(9), (n(9), n(2)));
        assert_eq!(s.edges, vec![(n(2), n(5)), (n(2), n(9))]);
        assert_eq!(s.parent_of(n(5)), None);
        assert_eq!(s.parent_of(n(2)), Some(n(5)));
        assert_eq!(s.parent_of(n(9)), Some(n(2)));
        assert_eq!(s.last_added(), n(9));
        assert!(s.is_tree());
    }

    #[test]
    fn tree_and_connectivity_checks() {
        let mut s = Subgraph::singleton(n(0));
        assert!(s.is_tree());
        s.nodes.push(n(1));
        assert!(!s.is_connected());
        s.edges.push((n(0), n(1)));
        s.nodes.push(n(2));
        s.edges.push((n(1), n(2)));
        s.edges.push((n(0), n(2)));
        assert!(s.is_connected());
        assert!(!s.is_tree());
    }

    fn ranked(items: &[(f64, u64)]) -> Vec<u64> {
        let mut v: Vec<(f64, Subgraph)> = items
            .iter()
            .map(|&(s, i)| (s, Subgraph::singleton(n(0)).extended(n(i), (n(0), n(i)))))
            .collect();
        sort_ranked(&mut v, |x| x.0, |x| &x.1);
        v.iter().map(|x| x.1.nodes[1].0).collect()
    }

    #[test]
    fn tie_break_prefers_smaller_ids() {
        let a = Subgraph::singleton(n(0)).extended(n(1), (n(0), n(1)));
        let b = Subgraph::singleton(n(0)).extended(n(2), (n(0), n(2)));
        assert_eq!(a.tie_break(&b), Ordering::Less);
        assert_eq!(ranked(&[(0.5, 2), (0.5, 1)]), vec![1, 2]);
        assert_eq!(ranked(&[(0.6, 1), (0.5, 2)]), vec![2, 1]);
    }

    #[test]
    fn last_bit_differences_count_as_ties() {
        let x = 0.242_020_181_629_102_63;
        assert_eq!(
            ranked(&[(x, 6), (x + 3e-16, 2), (x + 3e-16, 3), (x + 1e-9, 1)]),
            vec![2, 3, 6, 1]
        );
        assert_eq!(
            ranked(&[(1.0, 5), (f64::INFINITY, 1), (0.0, 9)]),
            vec![9, 5, 1]
        );
    }

    #[test]
    fn closing_keeps_sorted_set() {
        let mut s = Subgraph::singleton(n(0));
        s.close(n(4));
        s.close(n(1));
        s.close(n(4));
        assert_eq!(s.closed_endpoints, vec![n(1), n(4)]);
        assert!(s.is_closed(n(1)));
    }
}
