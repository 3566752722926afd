//! Pairwise Markov random fields over a finite label set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distribution::{CompatibilityMatrix, LabelDistribution};
use crate::error::{Error, Result};

/// External identifier of a variable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

/// An undirected edge with endpoints in ascending order.
pub type Edge = (NodeId, NodeId);

/// Orders the endpoints of `(u, v)`.
#[inline]
pub fn normalize_edge(u: NodeId, v: NodeId) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Immutable pairwise MRF.
///
/// Nodes are kept sorted by id, so a node's dense index order matches its id
/// order. Adjacency is stored in CSR form; slot `s` in
/// `offsets[i]..offsets[i + 1]` is the directed edge `i -> neighbors[s]`, which
/// makes the slot order the global sorted order of directed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Mrf {
    classes: usize,
    ids: Vec<NodeId>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    reverse: Vec<usize>,
    slot_edge: Vec<usize>,
    edges: Vec<(usize, usize)>,
    priors: Vec<LabelDistribution>,
    potentials: Vec<CompatibilityMatrix>,
}

impl Mrf {
    pub fn builder(classes: usize) -> MrfBuilder {
        MrfBuilder::new(classes)
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> NodeId {
        self.ids[index]
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index_of(id).is_some()
    }

    pub(crate) fn require(&self, id: NodeId) -> Result<usize> {
        self.index_of(id).ok_or(Error::UnknownNode(id))
    }

    /// Neighbor indices of node `index`, ascending.
    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.neighbors[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.offsets[index + 1] - self.offsets[index]
    }

    pub fn neighbor_ids(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let i = self.require(id)?;
        Ok(self.neighbors(i).iter().map(|&j| self.ids[j]).collect())
    }

    /// Undirected edges as ascending id pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|&(a, b)| (self.ids[a], self.ids[b]))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(i), Some(j)) => self.slot(i, j).is_some(),
            _ => false,
        }
    }

    pub fn prior(&self, index: usize) -> &LabelDistribution {
        &self.priors[index]
    }

    pub fn prior_of(&self, id: NodeId) -> Result<&LabelDistribution> {
        Ok(&self.priors[self.require(id)?])
    }

    /// Potential for an edge in its stored orientation (smaller id first).
    pub fn potential_of(&self, u: NodeId, v: NodeId) -> Result<&CompatibilityMatrix> {
        let i = self.require(u)?;
        let j = self.require(v)?;
        let s = self.slot(i, j).ok_or(Error::NotAnEdge(u, v))?;
        Ok(&self.potentials[self.slot_edge[s]])
    }

    // Directed-edge slot bookkeeping used by inference.

    pub(crate) fn slot_count(&self) -> usize {
        self.neighbors.len()
    }

    pub(crate) fn slots_of(&self, index: usize) -> std::ops::Range<usize> {
        self.offsets[index]..self.offsets[index + 1]
    }

    pub(crate) fn slot(&self, from: usize, to: usize) -> Option<usize> {
        let range = self.slots_of(from);
        let base = range.start;
        self.neighbors[range]
            .binary_search(&to)
            .ok()
            .map(|k| base + k)
    }

    pub(crate) fn slot_target(&self, slot: usize) -> usize {
        self.neighbors[slot]
    }

    pub(crate) fn reverse_slot(&self, slot: usize) -> usize {
        self.reverse[slot]
    }

    /// Compatibility `psi(x_from, x_to)` for the directed slot `from -> to`.
    #[inline]
    pub(crate) fn slot_potential(
        &self,
        from: usize,
        slot: usize,
        x_from: usize,
        x_to: usize,
    ) -> f64 {
        let pot = &self.potentials[self.slot_edge[slot]];
        if from < self.neighbors[slot] {
            pot.get(x_from, x_to)
        } else {
            pot.get(x_to, x_from)
        }
    }

    /// Restriction of the model to `nodes` and `edges`, keeping the parent's
    /// priors and potentials.
    pub fn induced_subgraph(&self, nodes: &[NodeId], edges: &[Edge]) -> Result<Mrf> {
        let node_set: BTreeSet<NodeId> = nodes.iter().copied().collect();
        let mut builder = MrfBuilder::new(self.classes);
        for &id in &node_set {
            builder.add_node(id, self.prior_of(id)?.clone())?;
        }
        for &(u, v) in edges {
            if !node_set.contains(&u) || !node_set.contains(&v) {
                return Err(Error::EdgeOutsideNodeSet(u, v));
            }
            let (a, b) = normalize_edge(u, v);
            let pot = self.potential_of(a, b)?.clone();
            builder.add_edge_oriented(a, b, pot)?;
        }
        builder.build()
    }
}

/// Incremental constructor for [`Mrf`].
#[derive(Debug, Clone)]
pub struct MrfBuilder {
    classes: usize,
    priors: BTreeMap<NodeId, LabelDistribution>,
    edges: BTreeMap<Edge, CompatibilityMatrix>,
}

impl MrfBuilder {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            priors: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn add_node(&mut self, id: NodeId, prior: LabelDistribution) -> Result<&mut Self> {
        if prior.classes() != self.classes {
            return Err(Error::ClassCountMismatch {
                expected: self.classes,
                found: prior.classes(),
            });
        }
        if self.priors.insert(id, prior).is_some() {
            return Err(Error::DuplicateNode(id));
        }
        Ok(self)
    }

    /// Adds `(u, v)` with `potential[(a, b)]` scoring `u = a, v = b`.
    pub fn add_edge(
        &mut self,
        u: NodeId,
        v: NodeId,
        potential: CompatibilityMatrix,
    ) -> Result<&mut Self> {
        if u <= v {
            self.add_edge_oriented(u, v, potential)
        } else {
            self.add_edge_oriented(v, u, potential.transposed())
        }
    }

    fn add_edge_oriented(
        &mut self,
        u: NodeId,
        v: NodeId,
        potential: CompatibilityMatrix,
    ) -> Result<&mut Self> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if potential.classes() != self.classes {
            return Err(Error::ClassCountMismatch {
                expected: self.classes,
                found: potential.classes(),
            });
        }
        if self.edges.insert((u, v), potential).is_some() {
            return Err(Error::DuplicateEdge(u, v));
        }
        Ok(self)
    }

    pub fn build(self) -> Result<Mrf> {
        if self.classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "class count must be at least 2, got {}",
                self.classes
            )));
        }
        let ids: Vec<NodeId> = self.priors.keys().copied().collect();
        let index = |id: NodeId| ids.binary_search(&id).map_err(|_| Error::UnknownNode(id));

        let n = ids.len();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut potentials = Vec::with_capacity(self.edges.len());
        for (e, ((u, v), pot)) in self.edges.into_iter().enumerate() {
            let (i, j) = (index(u)?, index(v)?);
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
            edges.push((i, j));
            potentials.push(pot);
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(2 * edges.len());
        let mut slot_edge = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for adj in &mut adjacency {
            adj.sort_unstable();
            for &(j, e) in adj.iter() {
                neighbors.push(j);
                slot_edge.push(e);
            }
            offsets.push(neighbors.len());
        }

        let mut mrf = Mrf {
            classes: self.classes,
            ids,
            offsets,
            neighbors,
            reverse: Vec::new(),
            slot_edge,
            edges,
            priors: self.priors.into_values().collect(),
            potentials,
        };
        let reverse = (0..n)
            .flat_map(|i| mrf.slots_of(i).map(move |s| (i, s)))
            .map(|(i, s)| {
                mrf.slot(mrf.neighbors[s], i)
                    .expect("adjacency is symmetric by construction")
            })
            .collect();
        mrf.reverse = reverse;
        Ok(mrf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> LabelDistribution {
        LabelDistribution::uniform(2)
    }

    fn path3() -> Mrf {
        let mut b = Mrf::builder(2);
        for i in 0..3 {
            b.add_node(NodeId(i), uniform()).unwrap();
        }
        let pot = CompatibilityMatrix::new(2, vec![0.7, 0.1, 0.2, 0.6]).unwrap();
        b.add_edge(NodeId(1), NodeId(0), pot.clone()).unwrap();
        b.add_edge(NodeId(1), NodeId(2), pot).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn adjacency_is_sorted_and_symmetric() {
        let m = path3();
        assert_eq!(m.neighbors(1), &[0, 2]);
        assert_eq!(m.neighbors(0), &[1]);
        for s in 0..m.slot_count() {
            assert_eq!(m.reverse_slot(m.reverse_slot(s)), s);
        }
        assert_eq!(
            m.edges().collect::<Vec<_>>(),
            vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))]
        );
    }

    #[test]
    fn reversed_insertion_is_transposed() {
        let m = path3();
        // added as (1, 0) with psi(1=a, 0=b); stored as (0, 1) transposed.
        let stored = m.potential_of(NodeId(0), NodeId(1)).unwrap();
        assert_eq!(stored.get(0, 1), 0.2);
        let s = m.slot(1, 0).unwrap();
        assert_eq!(m.slot_potential(1, s, 0, 1), 0.1);
        let r = m.slot(0, 1).unwrap();
        assert_eq!(m.slot_potential(0, r, 1, 0), 0.1);
    }

    #[test]
    fn rejects_invalid_structure() {
        let pot = CompatibilityMatrix::homophily(2, 0.9).unwrap();
        let mut b = Mrf::builder(2);
        b.add_node(NodeId(0), uniform()).unwrap();
        assert_eq!(
            b.add_edge(NodeId(0), NodeId(0), pot.clone()).unwrap_err(),
            Error::SelfLoop(NodeId(0))
        );
        b.add_node(NodeId(1), uniform()).unwrap();
        b.add_edge(NodeId(0), NodeId(1), pot.clone()).unwrap();
        assert!(matches!(
            b.add_edge(NodeId(1), NodeId(0), pot.clone()),
            Err(Error::DuplicateEdge(..))
        ));
        b.add_edge(NodeId(1), NodeId(7), pot).unwrap();
        assert_eq!(b.build().unwrap_err(), Error::UnknownNode(NodeId(7)));
    }

    #[test]
    fn induced_subgraph_keeps_parameters() {
        let m = path3();
        let single = m.induced_subgraph(&[NodeId(1)], &[]).unwrap();
        assert_eq!(single.node_count(), 1);
        assert_eq!(single.prior(0), m.prior(1));

        let all: Vec<Edge> = m.edges().collect();
        let same = m.induced_subgraph(m.node_ids(), &all).unwrap();
        assert_eq!(same, m);

        let err = m
            .induced_subgraph(&[NodeId(0)], &[(NodeId(0), NodeId(1))])
            .unwrap_err();
        assert_eq!(err, Error::EdgeOutsideNodeSet(NodeId(0), NodeId(1)));
        assert!(matches!(
            m.induced_subgraph(&[NodeId(0), NodeId(2)], &[(NodeId(0), NodeId(2))]),
            Err(Error::NotAnEdge(..))
        ));
    }
}
