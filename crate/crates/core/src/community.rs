//! Candidate communities and partitions.

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, Side, SparseGraph};

/// A candidate community: one node set, or a pair of side-sets for
/// bipartite graphs. Node ids are global graph ids, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommunityRef {
    Unipartite(Vec<usize>),
    Bipartite { u_side: Vec<usize>, v_side: Vec<usize> },
}

fn sorted_unique(mut nodes: Vec<usize>) -> Result<Vec<usize>, GraphError> {
    nodes.sort_unstable();
    if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
        return Err(GraphError::DuplicateNode(w[0]));
    }
    Ok(nodes)
}

impl CommunityRef {
    /// Builds a community from arbitrary node ids, validated against `g`.
    /// Bipartite graphs get the ids split by side.
    pub fn from_nodes(g: &SparseGraph, nodes: Vec<usize>) -> Result<Self, GraphError> {
        for &u in &nodes {
            g.check_node(u)?;
        }
        let nodes = sorted_unique(nodes)?;
        if g.is_bipartite() {
            let split = nodes.partition_point(|&u| u < g.node_count_u());
            let v_side = nodes[split..].to_vec();
            let mut u_side = nodes;
            u_side.truncate(split);
            Ok(CommunityRef::Bipartite { u_side, v_side })
        } else {
            Ok(CommunityRef::Unipartite(nodes))
        }
    }

    /// Builds a bipartite community from explicit side-sets, checking that
    /// each id lies on the declared side.
    pub fn bipartite(
        g: &SparseGraph,
        u_side: Vec<usize>,
        v_side: Vec<usize>,
    ) -> Result<Self, GraphError> {
        for (side, ids) in [(Side::U, &u_side), (Side::V, &v_side)] {
            for &id in ids.iter() {
                g.check_node(id)?;
                if g.side(id) != Some(side) {
                    return Err(GraphError::WrongSide { id, expected: side });
                }
            }
        }
        Ok(CommunityRef::Bipartite {
            u_side: sorted_unique(u_side)?,
            v_side: sorted_unique(v_side)?,
        })
    }

    /// Total member count (`|C_U| + |C_V|` for bipartite communities).
    pub fn len(&self) -> usize {
        match self {
            CommunityRef::Unipartite(c) => c.len(),
            CommunityRef::Bipartite { u_side, v_side } => u_side.len() + v_side.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_bipartite(&self) -> bool {
        matches!(self, CommunityRef::Bipartite { .. })
    }

    /// All members in ascending id order.
    pub fn members(&self) -> Vec<usize> {
        match self {
            CommunityRef::Unipartite(c) => c.clone(),
            CommunityRef::Bipartite { u_side, v_side } => {
                u_side.iter().chain(v_side.iter()).copied().collect()
            }
        }
    }

    /// Jaccard similarity of the member sets.
    pub fn jaccard(&self, other: &CommunityRef) -> f64 {
        let a = self.members();
        let b = other.members();
        let (mut i, mut j, mut common) = (0, 0, 0usize);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = a.len() + b.len() - common;
        if union == 0 {
            1.0
        } else {
            common as f64 / union as f64
        }
    }
}

/// Hard assignment of every node to one community, indices dense from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl Partition {
    /// Relabels arbitrary community labels densely in order of first
    /// appearance by node id.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let assignment: Vec<usize> = labels
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            community_count: remap.len(),
            assignment,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            community_count: n,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, u: usize) -> usize {
        self.assignment[u]
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// Member lists, indexed by community.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (u, &c) in self.assignment.iter().enumerate() {
            out[c].push(u);
        }
        out
    }

    pub fn to_community_refs(&self, g: &SparseGraph) -> Result<Vec<CommunityRef>, GraphError> {
        self.communities()
            .into_iter()
            .map(|c| CommunityRef::from_nodes(g, c))
            .collect()
    }
}
