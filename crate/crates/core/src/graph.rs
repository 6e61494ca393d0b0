//! Graphs with no edge loops, complete k-partite cores and supernova graphs.
//!
//! Nodes carry canonical string names: core nodes are `core:j:k` (part `j`,
//! position `k` inside the part) and leg nodes are `leg:i:m` (`i` = flat index
//! of the core node the leg hangs off, `m` = distance along the leg, starting
//! at 1). All dense vectors in the crate are indexed by the canonical node
//! order: core nodes part-major, then leg nodes walking outwards per core
//! node.

use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("partition part {0} is empty")]
    EmptyPart(usize),
    #[error("graph has no node named {0:?}")]
    UnknownNode(String),
    #[error("self-loop on node {0:?} rejected")]
    SelfLoop(String),
    #[error("duplicate edge {0:?} -- {1:?} rejected (simply-laced graphs carry at most one edge per pair)")]
    DuplicateEdge(String, String),
    #[error("leg lengths must be keyed exactly by the {expected} core nodes, got {got}")]
    LegKeyMismatch { expected: usize, got: usize },
    #[error("vector has {got} entries but the graph has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Finite simple graph: ordered nodes, at most one undirected edge per pair,
/// no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    names: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(names: Vec<String>) -> Self {
        Graph {
            names,
            edges: BTreeSet::new(),
        }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(self.names[a].clone()));
        }
        let key = (a.min(b), a.max(b));
        if !self.edges.insert(key) {
            return Err(GraphError::DuplicateEdge(
                self.names[key.0].clone(),
                self.names[key.1].clone(),
            ));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn node_index(&self, name: &str) -> Result<usize, GraphError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_owned()))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbours(&self, a: usize) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&b| self.adjacent(a, b))
            .collect()
    }

    /// Entries of the adjacency matrix (0 or 1 in this crate).
    pub fn adjacency(&self, a: usize, b: usize) -> i64 {
        if self.adjacent(a, b) {
            1
        } else {
            0
        }
    }

    /// Whether the support `{i : mask[i]}` induces a connected subgraph.
    pub fn support_connected(&self, mask: &[bool]) -> bool {
        let support: Vec<usize> = (0..self.node_count()).filter(|&i| mask[i]).collect();
        if support.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![support[0]];
        seen[support[0]] = true;
        while let Some(i) = stack.pop() {
            for j in self.neighbours(i) {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        support.iter().all(|&i| seen[i])
    }
}

/// Complete k-partite graph on the given part sizes: one edge between any two
/// nodes of different parts, none inside a part.
pub fn build_kpartite(part_sizes: &[usize]) -> Result<Graph, GraphError> {
    for (j, &s) in part_sizes.iter().enumerate() {
        if s == 0 {
            return Err(GraphError::EmptyPart(j));
        }
    }
    let mut names = Vec::new();
    let mut part_of = Vec::new();
    for (j, &s) in part_sizes.iter().enumerate() {
        for k in 0..s {
            names.push(format!("core:{j}:{k}"));
            part_of.push(j);
        }
    }
    let mut g = Graph::new(names);
    for a in 0..g.node_count() {
        for b in (a + 1)..g.node_count() {
            if part_of[a] != part_of[b] {
                g.add_edge(a, b)?;
            }
        }
    }
    Ok(g)
}

/// A complete k-partite core with one type-A leg glued to each core node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupernovaGraph {
    graph: Graph,
    part_sizes: Vec<usize>,
    /// part index of each core node (flat core order)
    core_part: Vec<usize>,
    leg_lengths: Vec<usize>,
    /// node indices of each leg, walking outwards
    legs: Vec<Vec<usize>>,
}

impl SupernovaGraph {
    /// Glue a leg of length `leg_lengths[i]` onto the i-th core node of the
    /// complete k-partite graph on `part_sizes`.
    pub fn build(part_sizes: &[usize], leg_lengths: &[usize]) -> Result<Self, GraphError> {
        let core = build_kpartite(part_sizes)?;
        let n_core = core.node_count();
        if leg_lengths.len() != n_core {
            return Err(GraphError::LegKeyMismatch {
                expected: n_core,
                got: leg_lengths.len(),
            });
        }
        let mut names = core.node_names().to_vec();
        let mut legs: Vec<Vec<usize>> = Vec::with_capacity(n_core);
        for (i, &l) in leg_lengths.iter().enumerate() {
            let mut leg = Vec::with_capacity(l);
            for m in 1..=l {
                leg.push(names.len());
                names.push(format!("leg:{i}:{m}"));
            }
            legs.push(leg);
        }
        let mut graph = Graph::new(names);
        for (a, b) in core.edges() {
            graph.add_edge(a, b)?;
        }
        for (i, leg) in legs.iter().enumerate() {
            let mut prev = i;
            for &node in leg {
                graph.add_edge(prev, node)?;
                prev = node;
            }
        }
        let mut core_part = Vec::with_capacity(n_core);
        for (j, &s) in part_sizes.iter().enumerate() {
            for _ in 0..s {
                core_part.push(j);
            }
        }
        Ok(SupernovaGraph {
            graph,
            part_sizes: part_sizes.to_vec(),
            core_part,
            leg_lengths: leg_lengths.to_vec(),
            legs,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.part_sizes
    }

    pub fn part_count(&self) -> usize {
        self.part_sizes.len()
    }

    pub fn core_node_count(&self) -> usize {
        self.core_part.len()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Part index of a core node (flat core order).
    pub fn part_of_core_node(&self, i: usize) -> usize {
        self.core_part[i]
    }

    /// Flat core-node indices of part `j`.
    pub fn part_nodes(&self, j: usize) -> Vec<usize> {
        (0..self.core_node_count())
            .filter(|&i| self.core_part[i] == j)
            .collect()
    }

    pub fn leg_lengths(&self) -> &[usize] {
        &self.leg_lengths
    }

    /// Chain of node indices hanging off core node `i`, walking outwards.
    pub fn leg(&self, i: usize) -> &[usize] {
        &self.legs[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kpartite_counts() {
        // a single edge on two nodes
        let g = build_kpartite(&[1, 1]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);

        // the triangle
        let g = build_kpartite(&[1, 1, 1]).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);

        // totally disconnected
        let g = build_kpartite(&[4]).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 0);

        // edge count = sum over part pairs of |I_j||I_j'|
        let g = build_kpartite(&[2, 3, 4]).unwrap();
        assert_eq!(g.edge_count(), 2 * 3 + 2 * 4 + 3 * 4);
    }

    #[test]
    fn empty_part_rejected() {
        assert_eq!(build_kpartite(&[2, 0]), Err(GraphError::EmptyPart(1)));
    }

    #[test]
    fn supernova_star_and_interval() {
        // star: core (1,3), no legs
        let s = SupernovaGraph::build(&[1, 3], &[0, 0, 0, 0]).unwrap();
        assert_eq!(s.node_count(), 4);
        assert_eq!(s.graph().edge_count(), 3);

        // interval: core (1,1), no legs
        let s = SupernovaGraph::build(&[1, 1], &[0, 0]).unwrap();
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.graph().edge_count(), 1);
    }

    #[test]
    fn supernova_triangle_with_leg() {
        // triangle plus one leg of length 1: 4 nodes
        let s = SupernovaGraph::build(&[1, 1, 1], &[1, 0, 0]).unwrap();
        assert_eq!(s.node_count(), 4);
        let g = s.graph();
        let foot = g.node_index("leg:0:1").unwrap();
        assert_eq!(g.neighbours(foot), vec![0]);
        // leg node adjacent only to its chain neighbour
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn leg_chain_adjacency() {
        let s = SupernovaGraph::build(&[1, 1], &[2, 0]).unwrap();
        let g = s.graph();
        let l1 = g.node_index("leg:0:1").unwrap();
        let l2 = g.node_index("leg:0:2").unwrap();
        assert!(g.adjacent(0, l1));
        assert!(g.adjacent(l1, l2));
        assert!(!g.adjacent(0, l2));
        assert_eq!(g.neighbours(l2), vec![l1]);
    }

    #[test]
    fn leg_key_mismatch() {
        assert!(matches!(
            SupernovaGraph::build(&[1, 1], &[0]),
            Err(GraphError::LegKeyMismatch { .. })
        ));
    }

    #[test]
    fn connected_support() {
        let s = SupernovaGraph::build(&[1, 1, 1], &[1, 0, 0]).unwrap();
        let g = s.graph();
        assert!(g.support_connected(&[true, true, true, true]));
        assert!(g.support_connected(&[true, false, false, true]));
        assert!(!g.support_connected(&[false, true, false, true]));
    }
}
