//! Sparse undirected multigraph storage.
//!
//! Adjacency is kept in compressed sparse rows. Every row entry stores the
//! stub weight `A(u, v)`: the edge multiplicity for `u != v`, and twice the
//! loop count on the diagonal. With that convention the degree of a node is
//! the plain row sum and every subset query below is a sum over row entries.

use std::collections::HashMap;

use thiserror::Error;

/// Errors raised while building or querying a [`SparseGraph`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id {id} out of range (graph has {count} nodes)")]
    NodeOutOfRange { id: usize, count: usize },
    #[error("bipartite edge {u}-{v} joins two nodes on the same side")]
    SameSideEdge { u: usize, v: usize },
    #[error("duplicate node id {0} in node set")]
    DuplicateNode(usize),
    #[error("node {id} is not on side {expected:?}")]
    WrongSide { id: usize, expected: Side },
    #[error("unknown node label {0:?}")]
    UnknownLabel(String),
    #[error("graph has no edges")]
    Empty,
}

/// Whether the node space is one set or two sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    Unipartite,
    Bipartite,
}

/// A side of a bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    U,
    V,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::U => Side::V,
            Side::V => Side::U,
        }
    }

    /// Token prefix used by the text formats.
    pub fn prefix(self) -> &'static str {
        match self {
            Side::U => "u:",
            Side::V => "v:",
        }
    }
}

/// Immutable undirected multigraph.
///
/// Bipartite graphs place side `U` at ids `0..nu` and side `V` at
/// `nu..nu + nv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    mode: GraphMode,
    nu: usize,
    nv: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<u64>,
    degrees: Vec<u64>,
    edge_count: u64,
    labels: Option<Vec<String>>,
}

impl SparseGraph {
    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn is_bipartite(&self) -> bool {
        self.mode == GraphMode::Bipartite
    }

    pub fn node_count(&self) -> usize {
        self.nu + self.nv
    }

    /// Size of side `U`, or all nodes when unipartite.
    pub fn node_count_u(&self) -> usize {
        self.nu
    }

    /// Size of side `V`; zero when unipartite.
    pub fn node_count_v(&self) -> usize {
        self.nv
    }

    /// Edge count with multiplicity; a self-loop counts once.
    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    /// Total stub count, `2 * edge_count()`.
    pub fn total_degree(&self) -> u64 {
        2 * self.edge_count
    }

    #[inline]
    pub fn degree(&self, u: usize) -> u64 {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    /// Side of `u`, `None` for unipartite graphs.
    pub fn side(&self, u: usize) -> Option<Side> {
        match self.mode {
            GraphMode::Unipartite => None,
            GraphMode::Bipartite if u < self.nu => Some(Side::U),
            GraphMode::Bipartite => Some(Side::V),
        }
    }

    /// Global id range of one side.
    pub fn side_range(&self, side: Side) -> std::ops::Range<usize> {
        match side {
            Side::U => 0..self.nu,
            Side::V => self.nu..self.nu + self.nv,
        }
    }

    /// Row of `u` as `(neighbor, stub weight)` pairs sorted by neighbor.
    #[inline]
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Stub weight `A(u, v)`; the diagonal holds twice the loop count.
    pub fn stub_weight(&self, u: usize, v: usize) -> u64 {
        let range = self.offsets[u]..self.offsets[u + 1];
        match self.targets[range.clone()].binary_search(&v) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0,
        }
    }

    /// Number of edges between `u` and `v` (loops counted once each).
    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        let w = self.stub_weight(u, v);
        if u == v {
            w / 2
        } else {
            w
        }
    }

    pub fn check_node(&self, u: usize) -> Result<(), GraphError> {
        if u < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                id: u,
                count: self.node_count(),
            })
        }
    }

    fn mask(&self, set: &[usize]) -> Result<Vec<bool>, GraphError> {
        let mut mask = vec![false; self.node_count()];
        for &v in set {
            self.check_node(v)?;
            if std::mem::replace(&mut mask[v], true) {
                return Err(GraphError::DuplicateNode(v));
            }
        }
        Ok(mask)
    }

    /// `d_S`: total degree of a node set.
    pub fn subset_degree(&self, set: &[usize]) -> Result<u64, GraphError> {
        set.iter().try_fold(0u64, |acc, &u| {
            self.check_node(u)?;
            Ok(acc + self.degrees[u])
        })
    }

    /// `d_u(S)`: stubs of `u` landing in `S`. A self-loop at `u` counts 2
    /// when `u` is in `S`.
    pub fn degree_into(&self, u: usize, set: &[usize]) -> Result<u64, GraphError> {
        self.check_node(u)?;
        let mask = self.mask(set)?;
        Ok(self.degree_into_mask(u, &mask))
    }

    pub(crate) fn degree_into_mask(&self, u: usize, mask: &[bool]) -> u64 {
        self.neighbors(u)
            .filter(|&(v, _)| mask[v])
            .map(|(_, w)| w)
            .sum()
    }

    /// `d_S(T) = sum over u in S of d_u(T)`.
    pub fn cross_degree(&self, s: &[usize], t: &[usize]) -> Result<u64, GraphError> {
        let mask = self.mask(t)?;
        // validate S for range and duplicates
        self.mask(s)?;
        Ok(s.iter().map(|&u| self.degree_into_mask(u, &mask)).sum())
    }

    /// Original label of a node, or its id when the graph was built from
    /// dense ids.
    pub fn label(&self, u: usize) -> String {
        match (&self.labels, self.side(u)) {
            (Some(labels), _) => labels[u].clone(),
            (None, Some(Side::V)) => (u - self.nu).to_string(),
            (None, _) => u.to_string(),
        }
    }

    /// Label as written in text formats: bipartite labels carry a side prefix.
    pub fn display_label(&self, u: usize) -> String {
        match self.side(u) {
            Some(side) => format!("{}{}", side.prefix(), self.label(u)),
            None => self.label(u),
        }
    }

    /// True when node ids are their own labels (no renaming on ingestion).
    pub fn has_identity_labels(&self) -> bool {
        self.labels.is_none()
    }

    pub(crate) fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub(crate) fn with_labels(mut self, labels: Vec<String>) -> Self {
        debug_assert_eq!(labels.len(), self.node_count());
        self.labels = Some(labels);
        self
    }

    /// Lookup table from display label to node id.
    pub fn label_index(&self) -> LabelIndex {
        LabelIndex::new(self)
    }
}

/// Resolves text tokens (as found in community files) to node ids.
#[derive(Debug, Clone)]
pub struct LabelIndex {
    mode: GraphMode,
    nu: usize,
    nv: usize,
    named: Option<HashMap<String, usize>>,
}

impl LabelIndex {
    fn new(g: &SparseGraph) -> Self {
        let named = g.labels().map(|_| {
            (0..g.node_count())
                .map(|u| (g.display_label(u), u))
                .collect::<HashMap<_, _>>()
        });
        LabelIndex {
            mode: g.mode,
            nu: g.nu,
            nv: g.nv,
            named,
        }
    }

    pub fn resolve(&self, token: &str) -> Result<usize, GraphError> {
        let unknown = || GraphError::UnknownLabel(token.to_string());
        if let Some(map) = &self.named {
            return map.get(token).copied().ok_or_else(unknown);
        }
        let parse = |s: &str, bound: usize| -> Result<usize, GraphError> {
            let id: usize = s.parse().map_err(|_| unknown())?;
            if id < bound {
                Ok(id)
            } else {
                Err(unknown())
            }
        };
        match self.mode {
            GraphMode::Unipartite => parse(token, self.nu),
            GraphMode::Bipartite => {
                if let Some(rest) = token.strip_prefix("u:") {
                    parse(rest, self.nu)
                } else if let Some(rest) = token.strip_prefix("v:") {
                    Ok(self.nu + parse(rest, self.nv)?)
                } else {
                    parse(token, self.nu + self.nv)
                }
            }
        }
    }
}

/// Accumulates edges and produces a [`SparseGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    mode: GraphMode,
    nu: usize,
    nv: usize,
    entries: Vec<(usize, usize, u64)>,
}

impl GraphBuilder {
    pub fn unipartite(n: usize) -> Self {
        GraphBuilder {
            mode: GraphMode::Unipartite,
            nu: n,
            nv: 0,
            entries: Vec::new(),
        }
    }

    pub fn bipartite(nu: usize, nv: usize) -> Self {
        GraphBuilder {
            mode: GraphMode::Bipartite,
            nu,
            nv,
            entries: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nu + self.nv
    }

    /// Adds `multiplicity` parallel edges between `u` and `v`. Repeated
    /// pairs accumulate.
    pub fn add_edge(&mut self, u: usize, v: usize, multiplicity: u64) -> Result<(), GraphError> {
        let n = self.node_count();
        for id in [u, v] {
            if id >= n {
                return Err(GraphError::NodeOutOfRange { id, count: n });
            }
        }
        if self.mode == GraphMode::Bipartite && ((u < self.nu) == (v < self.nu)) {
            return Err(GraphError::SameSideEdge { u, v });
        }
        if multiplicity == 0 {
            return Ok(());
        }
        if u == v {
            self.entries.push((u, u, 2 * multiplicity));
        } else {
            self.entries.push((u, v, multiplicity));
            self.entries.push((v, u, multiplicity));
        }
        Ok(())
    }

    pub fn build(mut self) -> SparseGraph {
        let n = self.node_count();
        self.entries.sort_unstable_by_key(|&(u, v, _)| (u, v));

        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(self.entries.len());
        let mut weights: Vec<u64> = Vec::with_capacity(self.entries.len());
        let mut degrees = vec![0u64; n];
        let mut last: Option<(usize, usize)> = None;

        for &(u, v, w) in &self.entries {
            if last == Some((u, v)) {
                *weights.last_mut().expect("merged entry") += w;
            } else {
                targets.push(v);
                weights.push(w);
                offsets[u + 1] += 1;
                last = Some((u, v));
            }
            degrees[u] += w;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let total: u64 = degrees.iter().sum();

        SparseGraph {
            mode: self.mode,
            nu: self.nu,
            nv: self.nv,
            offsets,
            targets,
            weights,
            degrees,
            edge_count: total / 2,
            labels: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SparseGraph {
        let mut b = GraphBuilder::unipartite(3);
        b.add_edge(0, 1, 1).unwrap();
        b.add_edge(1, 2, 1).unwrap();
        b.add_edge(0, 2, 1).unwrap();
        b.build()
    }

    fn four_cycle() -> SparseGraph {
        let mut b = GraphBuilder::unipartite(4);
        for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            b.add_edge(u, v, 1).unwrap();
        }
        b.build()
    }

    pub(crate) fn joined_triangles() -> SparseGraph {
        let mut b = GraphBuilder::unipartite(6);
        for (u, v) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)] {
            b.add_edge(u, v, 1).unwrap();
        }
        b.build()
    }

    #[test]
    fn triangle_degrees() {
        let g = triangle();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn duplicate_edges_accumulate() {
        let mut b = GraphBuilder::unipartite(2);
        b.add_edge(0, 1, 1).unwrap();
        b.add_edge(0, 1, 1).unwrap();
        let g = b.build();
        assert_eq!(g.multiplicity(0, 1), 2);
        assert_eq!(g.multiplicity(1, 0), 2);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn self_loop_counts_two() {
        let mut b = GraphBuilder::unipartite(2);
        b.add_edge(0, 0, 1).unwrap();
        b.add_edge(0, 1, 1).unwrap();
        let g = b.build();
        assert_eq!(g.degree(0), 3);
        assert_eq!(g.multiplicity(0, 0), 1);
        assert_eq!(g.stub_weight(0, 0), 2);
        assert_eq!(g.degree_into(0, &[0]).unwrap(), 2);
        assert_eq!(g.degree_into(0, &[1]).unwrap(), 1);
        assert_eq!(g.total_degree(), 4);
    }

    #[test]
    fn subset_degree_examples() {
        let g = triangle();
        assert_eq!(g.subset_degree(&[0, 1]).unwrap(), 4);
        assert_eq!(g.subset_degree(&[]).unwrap(), 0);
        assert!(matches!(
            g.subset_degree(&[5]),
            Err(GraphError::NodeOutOfRange { id: 5, .. })
        ));
    }

    #[test]
    fn degree_into_examples() {
        let g = triangle();
        assert_eq!(g.degree_into(0, &[1, 2]).unwrap(), 2);
        assert_eq!(g.degree_into(0, &[]).unwrap(), 0);
        assert_eq!(four_cycle().degree_into(0, &[1, 2]).unwrap(), 1);
        assert!(g.degree_into(3, &[]).is_err());
        assert!(g.degree_into(0, &[1, 1]).is_err());
    }

    #[test]
    fn cross_degree_examples() {
        let g = triangle();
        assert_eq!(g.cross_degree(&[0], &[1, 2]).unwrap(), 2);
        assert_eq!(g.cross_degree(&[0, 1, 2], &[0, 1, 2]).unwrap(), 6);
        let j = joined_triangles();
        assert_eq!(j.cross_degree(&[0, 1, 2], &[3, 4, 5]).unwrap(), 1);
    }

    #[test]
    fn bipartite_rejects_same_side() {
        let mut b = GraphBuilder::bipartite(2, 2);
        assert!(b.add_edge(0, 2, 1).is_ok());
        assert_eq!(b.add_edge(0, 1, 1), Err(GraphError::SameSideEdge { u: 0, v: 1 }));
        assert!(b.add_edge(2, 3, 1).is_err());
        assert!(b.add_edge(3, 3, 1).is_err());
    }

    #[test]
    fn label_index_identity_bipartite() {
        let g = GraphBuilder::bipartite(3, 2).build();
        let idx = g.label_index();
        assert_eq!(idx.resolve("u:2").unwrap(), 2);
        assert_eq!(idx.resolve("v:1").unwrap(), 4);
        assert_eq!(idx.resolve("4").unwrap(), 4);
        assert!(idx.resolve("v:2").is_err());
        assert_eq!(g.display_label(4), "v:1");
    }
}
