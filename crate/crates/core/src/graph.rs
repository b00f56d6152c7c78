//! Undirected simple graphs with stable integer node identifiers.

use std::fmt;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{DmcError, Result};

/// Dense node identifier. Identifiers are never reused after a removal.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type NeighborSet = FxHashSet<NodeId>;

/// Per-step statistics of one reversed DMC step.
///
/// `w` is the complementation indicator, `x` the number of shared (unmodified)
/// neighbours and `y` the size of the neighbourhood union, i.e. the anchor's
/// degree before mutation.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepStats {
    pub w: u32,
    pub x: u32,
    pub y: u32,
}

/// Everything needed to put a node and its anchor back after a reverse step.
#[derive(Clone, Debug)]
pub struct UndoRecord {
    new: NodeId,
    anchor: NodeId,
    new_neighbors: NeighborSet,
    anchor_neighbors: NeighborSet,
}

/// An undirected simple graph.
///
/// Adjacency is kept as one hashed set per live node so that neighbourhood
/// unions and intersections for a pair cost `O(min degree)`.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    adjacency: Vec<Option<NeighborSet>>,
    node_count: usize,
    edge_count: usize,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A graph with `n` isolated nodes `0..n`.
    pub fn with_nodes(n: usize) -> Self {
        Graph {
            adjacency: vec![Some(NeighborSet::default()); n],
            node_count: n,
            edge_count: 0,
        }
    }

    /// Builds a graph on nodes `0..n` from an edge list. Self-loops and
    /// repeated edges are ignored.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = Graph::with_nodes(n);
        for &(u, v) in edges {
            if u != v {
                g.add_edge(NodeId(u), NodeId(v))?;
            }
        }
        Ok(g)
    }

    pub fn add_node(&mut self) -> NodeId {
        let id = NodeId(self.adjacency.len() as u32);
        self.adjacency.push(Some(NeighborSet::default()));
        self.node_count += 1;
        id
    }

    pub fn remove_node(&mut self, v: NodeId) -> Result<()> {
        let nbrs = self
            .adjacency
            .get_mut(v.index())
            .and_then(Option::take)
            .ok_or(DmcError::UnknownNode(v))?;
        for u in &nbrs {
            self.slot_mut(*u).remove(&v);
        }
        self.edge_count -= nbrs.len();
        self.node_count -= 1;
        Ok(())
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        matches!(self.adjacency.get(v.index()), Some(Some(_)))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.node_count == 0
    }

    /// One past the largest identifier ever issued.
    pub fn id_bound(&self) -> usize {
        self.adjacency.len()
    }

    /// Live nodes in ascending identifier order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_some())
            .map(|(i, _)| NodeId(i as u32))
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in self.nodes() {
            let mut row: Vec<NodeId> = self.slot(u).iter().copied().filter(|v| *v > u).collect();
            row.sort_unstable();
            out.extend(row.into_iter().map(|v| (u, v)));
        }
        out
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&NeighborSet> {
        self.adjacency
            .get(v.index())
            .and_then(Option::as_ref)
            .ok_or(DmcError::UnknownNode(v))
    }

    /// Neighbours of `v` in ascending order.
    pub fn sorted_neighbors(&self, v: NodeId) -> Result<Vec<NodeId>> {
        let mut out: Vec<NodeId> = self.neighbors(v)?.iter().copied().collect();
        out.sort_unstable();
        Ok(out)
    }

    /// `N(u) \ {v}`.
    pub fn neighbors_excluding(&self, u: NodeId, v: NodeId) -> Result<NeighborSet> {
        self.check(v)?;
        let mut out = self.neighbors(u)?.clone();
        out.remove(&v);
        Ok(out)
    }

    pub fn degree(&self, v: NodeId) -> Result<usize> {
        Ok(self.neighbors(v)?.len())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> Result<bool> {
        self.check(v)?;
        Ok(self.neighbors(u)?.contains(&v))
    }

    /// Adds `u`-`v`. Returns whether the edge was new.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(DmcError::SelfPair(u));
        }
        let fresh = self.slot_mut(u).insert(v);
        if fresh {
            self.slot_mut(v).insert(u);
            self.edge_count += 1;
        }
        Ok(fresh)
    }

    /// Removes `u`-`v`. Returns whether the edge existed.
    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(DmcError::SelfPair(u));
        }
        let existed = self.slot_mut(u).remove(&v);
        if existed {
            self.slot_mut(v).remove(&u);
            self.edge_count -= 1;
        }
        Ok(existed)
    }

    /// Flips the `u`-`v` edge; returns whether it is present afterwards.
    pub fn toggle_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        if self.remove_edge(u, v)? {
            Ok(false)
        } else {
            self.add_edge(u, v)
        }
    }

    /// `(W, X, Y)` for the pair without mutating the graph. `X` and `Y` are
    /// taken over neighbourhoods that exclude the pair itself.
    pub fn pair_stats(&self, u: NodeId, v: NodeId) -> Result<StepStats> {
        if u == v {
            return Err(DmcError::SelfPair(u));
        }
        let nu = self.neighbors(u)?;
        let nv = self.neighbors(v)?;
        Ok(pair_stats_of(u, v, nu, nv))
    }

    /// Reverses one DMC step with `new` duplicated from `anchor`: drops the
    /// complementation edge, merges `new`'s neighbours into `anchor` and
    /// deletes `new`.
    pub fn reverse_step(&mut self, new: NodeId, anchor: NodeId) -> Result<StepStats> {
        self.reverse_step_inner(new, anchor, false).map(|(s, _)| s)
    }

    /// Like [`Graph::reverse_step`] but also returns what [`Graph::undo`]
    /// needs to restore the previous state.
    pub fn reverse_step_with_undo(
        &mut self,
        new: NodeId,
        anchor: NodeId,
    ) -> Result<(StepStats, UndoRecord)> {
        self.reverse_step_inner(new, anchor, true)
            .map(|(s, u)| (s, u.expect("undo requested")))
    }

    fn reverse_step_inner(
        &mut self,
        new: NodeId,
        anchor: NodeId,
        keep_undo: bool,
    ) -> Result<(StepStats, Option<UndoRecord>)> {
        if new == anchor {
            return Err(DmcError::SelfPair(new));
        }
        self.check(anchor)?;
        let new_nbrs = self
            .adjacency
            .get_mut(new.index())
            .and_then(Option::take)
            .ok_or(DmcError::UnknownNode(new))?;
        let undo = keep_undo.then(|| UndoRecord {
            new,
            anchor,
            new_neighbors: new_nbrs.clone(),
            anchor_neighbors: self.slot(anchor).clone(),
        });
        let stats = pair_stats_of(new, anchor, &new_nbrs, self.slot(anchor));

        self.edge_count -= new_nbrs.len();
        self.node_count -= 1;
        for z in &new_nbrs {
            if *z == anchor {
                continue;
            }
            let zs = self.slot_mut(*z);
            zs.remove(&new);
            if zs.insert(anchor) {
                self.slot_mut(anchor).insert(*z);
                self.edge_count += 1;
            }
        }
        self.slot_mut(anchor).remove(&new);
        Ok((stats, undo))
    }

    /// Restores the state before the reverse step that produced `undo`.
    /// Undo records must be replayed in reverse order.
    pub fn undo(&mut self, undo: UndoRecord) {
        let UndoRecord {
            new,
            anchor,
            new_neighbors,
            anchor_neighbors,
        } = undo;
        let current = self.adjacency[anchor.index()]
            .take()
            .expect("anchor is live");
        for z in &current {
            self.slot_mut(*z).remove(&anchor);
        }
        self.edge_count -= current.len();
        self.adjacency[anchor.index()] = Some(NeighborSet::default());
        self.adjacency[new.index()] = Some(NeighborSet::default());
        self.node_count += 1;
        for z in &anchor_neighbors {
            self.add_edge(anchor, *z)
                .expect("restored edge endpoints are live");
        }
        for z in &new_neighbors {
            self.add_edge(new, *z)
                .expect("restored edge endpoints are live");
        }
    }

    /// Subgraph induced by `keep`; node `i` of the result is `keep[i]`.
    pub fn induced_subgraph(&self, keep: &[NodeId]) -> Result<Graph> {
        let mut index = rustc_hash::FxHashMap::default();
        for (i, v) in keep.iter().enumerate() {
            self.check(*v)?;
            index.insert(*v, NodeId(i as u32));
        }
        let mut g = Graph::with_nodes(keep.len());
        for (i, v) in keep.iter().enumerate() {
            for z in self.slot(*v) {
                if let Some(&j) = index.get(z) {
                    g.add_edge(NodeId(i as u32), j)?;
                }
            }
        }
        Ok(g)
    }

    /// Debug check of the symmetry, loop-freedom and bookkeeping invariants.
    pub fn check_invariants(&self) -> bool {
        let mut degree_sum = 0;
        let mut count = 0;
        for u in self.nodes() {
            count += 1;
            for v in self.slot(u) {
                if *v == u || !self.contains(*v) || !self.slot(*v).contains(&u) {
                    return false;
                }
                degree_sum += 1;
            }
        }
        count == self.node_count && degree_sum == 2 * self.edge_count
    }

    #[inline]
    fn check(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(DmcError::UnknownNode(v))
        }
    }

    #[inline]
    fn slot(&self, v: NodeId) -> &NeighborSet {
        self.adjacency[v.index()].as_ref().expect("live node")
    }

    #[inline]
    fn slot_mut(&mut self, v: NodeId) -> &mut NeighborSet {
        self.adjacency[v.index()].as_mut().expect("live node")
    }
}

fn pair_stats_of(u: NodeId, v: NodeId, nu: &NeighborSet, nv: &NeighborSet) -> StepStats {
    let w = nu.contains(&v) as u32;
    let (small, large) = if nu.len() <= nv.len() {
        (nu, nv)
    } else {
        (nv, nu)
    };
    // No self-loops, so neither u nor v can be a shared neighbour.
    let x = small.iter().filter(|z| large.contains(z)).count() as u32;
    let y = (nu.len() + nv.len()) as u32 - 2 * w - x;
    debug_assert!(!nu.contains(&u) && !nv.contains(&v));
    StepStats { w, x, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: u32) -> Graph {
        let mut edges = vec![];
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::from_edges(n as usize, &edges).unwrap()
    }

    #[test]
    fn add_node_cases() {
        let mut g = Graph::new();
        let a = g.add_node();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert!(g.neighbors(a).unwrap().is_empty());
        g.add_node();
        assert_eq!((g.node_count(), g.edge_count()), (2, 0));

        let mut g = k(3);
        let d = g.add_node();
        assert_eq!((g.node_count(), g.edge_count()), (4, 3));
        assert_eq!(g.degree(d).unwrap(), 0);
    }

    #[test]
    fn remove_node_cases() {
        let mut g = k(3);
        g.remove_node(NodeId(1)).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert!(g.has_edge(NodeId(0), NodeId(2)).unwrap());

        let mut path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        path.remove_node(NodeId(1)).unwrap();
        assert_eq!((path.node_count(), path.edge_count()), (2, 0));

        let mut single = Graph::with_nodes(1);
        single.remove_node(NodeId(0)).unwrap();
        assert!(single.is_empty());
        assert!(matches!(
            single.remove_node(NodeId(0)),
            Err(DmcError::UnknownNode(_))
        ));
    }

    #[test]
    fn removed_ids_are_not_reused() {
        let mut g = Graph::with_nodes(2);
        g.remove_node(NodeId(1)).unwrap();
        assert_eq!(g.add_node(), NodeId(2));
    }

    #[test]
    fn neighbors_excluding_cases() {
        let g = k(3);
        let got = g.neighbors_excluding(NodeId(0), NodeId(1)).unwrap();
        assert_eq!(got.into_iter().collect::<Vec<_>>(), vec![NodeId(2)]);

        let g = Graph::with_nodes(2);
        assert!(g
            .neighbors_excluding(NodeId(0), NodeId(1))
            .unwrap()
            .is_empty());

        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut got: Vec<_> = star
            .neighbors_excluding(NodeId(0), NodeId(1))
            .unwrap()
            .into_iter()
            .collect();
        got.sort();
        assert_eq!(got, vec![NodeId(2), NodeId(3)]);
        assert!(star.neighbors_excluding(NodeId(0), NodeId(9)).is_err());
    }

    #[test]
    fn accessors() {
        let g = k(3);
        assert_eq!(g.edge_count(), 3);
        assert!(!g.has_edge(NodeId(1), NodeId(1)).unwrap());
        let star = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        assert_eq!(star.degree(NodeId(0)).unwrap(), 5);
        assert!(star.degree(NodeId(7)).is_err());
        assert!(star.has_edge(NodeId(0), NodeId(7)).is_err());
    }

    #[test]
    fn toggle_edge_flips() {
        let mut g = Graph::with_nodes(2);
        assert!(g.toggle_edge(NodeId(0), NodeId(1)).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert!(!g.toggle_edge(NodeId(1), NodeId(0)).unwrap());
        assert_eq!(g.edge_count(), 0);
        assert!(g.toggle_edge(NodeId(0), NodeId(0)).is_err());
    }

    #[test]
    fn reverse_step_and_undo_restore_graph() {
        let g0 = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (1, 4)]).unwrap();
        let mut g = g0.clone();
        let (s, undo) = g.reverse_step_with_undo(NodeId(3), NodeId(0)).unwrap();
        assert_eq!(s, g0.pair_stats(NodeId(3), NodeId(0)).unwrap());
        assert!(g.check_invariants());
        g.undo(undo);
        assert!(g.check_invariants());
        assert_eq!(g.edges(), g0.edges());
        assert_eq!(g.node_count(), 5);
    }

    #[test]
    fn induced_subgraph_of_complete_graph() {
        let g = k(6);
        let sub = g
            .induced_subgraph(&[NodeId(1), NodeId(3), NodeId(5)])
            .unwrap();
        assert_eq!((sub.node_count(), sub.edge_count()), (3, 3));
    }
}
