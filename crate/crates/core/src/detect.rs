//! Community finders: Louvain modularity maximization for unipartite graphs
//! and an annealing extractor for bipartite graphs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::community::{CommunityRef, Partition};
use crate::graph::{GraphError, Side, SparseGraph};
use crate::rng::substream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("operation needs a unipartite graph")]
    BipartiteGraph,
    #[error("operation needs a bipartite graph")]
    UnipartiteGraph,
    #[error("community has an empty side")]
    EmptySide,
    #[error("partition covers {partition} nodes but the graph has {graph}")]
    PartitionSize { partition: usize, graph: usize },
}

/// Newman-Girvan modularity with stub-weight conventions: a self-loop adds
/// 2 to both the internal weight and the degree.
pub fn modularity(g: &SparseGraph, partition: &Partition) -> Result<f64, DetectError> {
    if partition.node_count() != g.node_count() {
        return Err(DetectError::PartitionSize {
            partition: partition.node_count(),
            graph: g.node_count(),
        });
    }
    let m2 = g.total_degree() as f64;
    if m2 == 0.0 {
        return Err(DetectError::EmptyGraph);
    }
    let k = partition.community_count();
    let mut internal = vec![0u64; k];
    let mut total = vec![0u64; k];
    for u in 0..g.node_count() {
        let c = partition.community_of(u);
        total[c] += g.degree(u);
        internal[c] += g
            .neighbors(u)
            .filter(|&(v, _)| partition.community_of(v) == c)
            .map(|(_, w)| w)
            .sum::<u64>();
    }
    Ok(internal
        .iter()
        .zip(&total)
        .map(|(&i, &t)| i as f64 / m2 - (t as f64 / m2).powi(2))
        .sum())
}

/// Weighted graph of one Louvain level. `self_weight` holds the stub weight
/// of loops, which after aggregation is the community's internal weight.
struct Level {
    adj: Vec<Vec<(usize, u64)>>,
    self_weight: Vec<u64>,
    strength: Vec<u64>,
    m2: f64,
}

impl Level {
    fn from_graph(g: &SparseGraph) -> Self {
        let n = g.node_count();
        let mut adj = vec![Vec::new(); n];
        let mut self_weight = vec![0u64; n];
        for (u, row) in adj.iter_mut().enumerate() {
            for (v, w) in g.neighbors(u) {
                if u == v {
                    self_weight[u] = w;
                } else {
                    row.push((v, w));
                }
            }
        }
        Level {
            adj,
            self_weight,
            strength: g.degrees().to_vec(),
            m2: g.total_degree() as f64,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn quality(&self, comm: &[usize], count: usize) -> f64 {
        let mut internal = vec![0u64; count];
        let mut total = vec![0u64; count];
        for i in 0..self.len() {
            let c = comm[i];
            total[c] += self.strength[i];
            internal[c] += self.self_weight[i];
            internal[c] += self.adj[i]
                .iter()
                .filter(|&&(j, _)| comm[j] == c)
                .map(|&(_, w)| w)
                .sum::<u64>();
        }
        internal
            .iter()
            .zip(&total)
            .map(|(&i, &t)| (i as f64 - (t as f64).powi(2) / self.m2) / self.m2)
            .sum()
    }

    /// Local moving phase. Returns dense community labels and whether any
    /// node moved.
    fn local_moves<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, usize, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut total: Vec<f64> = self.strength.iter().map(|&k| k as f64).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut weight_to = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let k_i = self.strength[i] as f64;
                let old = comm[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += w as f64;
                }
                total[old] -= k_i;
                let mut best = old;
                let mut best_gain = weight_to[old] - total[old] * k_i / self.m2;
                for &c in &touched {
                    let gain = weight_to[c] - total[c] * k_i / self.m2;
                    if gain > best_gain + 1e-12 {
                        best = c;
                        best_gain = gain;
                    }
                }
                total[best] += k_i;
                comm[i] = best;
                if best != old {
                    moved = true;
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        let relabel = Partition::from_labels(&comm);
        let count = relabel.community_count();
        (relabel.assignment().to_vec(), count, any_move)
    }

    fn aggregate(&self, comm: &[usize], count: usize) -> Level {
        let mut self_weight = vec![0u64; count];
        let mut strength = vec![0u64; count];
        let mut maps: Vec<std::collections::BTreeMap<usize, u64>> = vec![Default::default(); count];
        for i in 0..self.len() {
            let c = comm[i];
            self_weight[c] += self.self_weight[i];
            strength[c] += self.strength[i];
            for &(j, w) in &self.adj[i] {
                let d = comm[j];
                if d == c {
                    self_weight[c] += w;
                } else {
                    *maps[c].entry(d).or_insert(0) += w;
                }
            }
        }
        Level {
            adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_weight,
            strength,
            m2: self.m2,
        }
    }
}

/// Louvain output with the modularity after every aggregation level.
#[derive(Debug, Clone, PartialEq)]
pub struct LouvainResult {
    pub partition: Partition,
    pub modularity: f64,
    /// Modularity of the singleton start followed by each completed level.
    pub level_modularity: Vec<f64>,
}

/// Two-phase Louvain at resolution 1. The visit order of every level is
/// shuffled from `seed`.
pub fn louvain(g: &SparseGraph, seed: u64) -> Result<Partition, DetectError> {
    louvain_detailed(g, seed).map(|r| r.partition)
}

pub fn louvain_detailed(g: &SparseGraph, seed: u64) -> Result<LouvainResult, DetectError> {
    if g.is_bipartite() {
        return Err(DetectError::BipartiteGraph);
    }
    if g.node_count() == 0 {
        return Err(DetectError::EmptyGraph);
    }
    if g.total_degree() == 0 {
        return Ok(LouvainResult {
            partition: Partition::singletons(g.node_count()),
            modularity: 0.0,
            level_modularity: vec![0.0],
        });
    }
    let mut level = Level::from_graph(g);
    let mut membership: Vec<usize> = (0..g.node_count()).collect();
    let singletons: Vec<usize> = (0..level.len()).collect();
    let mut level_modularity = vec![level.quality(&singletons, level.len())];
    for depth in 0u64.. {
        let mut rng = substream(seed, &[depth]);
        let (comm, count, moved) = level.local_moves(&mut rng);
        if !moved || count == level.len() {
            break;
        }
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        level_modularity.push(level.quality(&comm, count));
        level = level.aggregate(&comm, count);
    }
    let partition = Partition::from_labels(&membership);
    Ok(LouvainResult {
        modularity: *level_modularity.last().expect("at least the singleton level"),
        partition,
        level_modularity,
    })
}

/// Size-normalized bipartite quality:
/// `(E - D_U D_V / m) / sqrt(|C_U| |C_V|)`, where `E` counts edges between
/// the two member sets, `D_U`, `D_V` are their degree sums and `m` is the
/// edge count.
pub fn bipartite_quality(g: &SparseGraph, community: &CommunityRef) -> Result<f64, DetectError> {
    if !g.is_bipartite() {
        return Err(DetectError::UnipartiteGraph);
    }
    let CommunityRef::Bipartite { u_side, v_side } = community else {
        return Err(DetectError::UnipartiteGraph);
    };
    if u_side.is_empty() || v_side.is_empty() {
        return Err(DetectError::EmptySide);
    }
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return Err(DetectError::EmptyGraph);
    }
    let inside = g.cross_degree(u_side, v_side)? as f64;
    let d_u = g.subset_degree(u_side)? as f64;
    let d_v = g.subset_degree(v_side)? as f64;
    Ok((inside - d_u * d_v / m) / ((u_side.len() * v_side.len()) as f64).sqrt())
}

/// Default move budget: ten toggles per node.
pub fn default_max_iterations(g: &SparseGraph) -> usize {
    10 * g.node_count()
}

/// Gains at or below this are treated as zero.
const GAIN_EPS: f64 = 1e-12;

/// Running state of the bipartite extractor. All sums needed by the
/// quality are cached so a toggle gain costs O(1).
#[derive(Debug, Clone)]
pub struct AnnealState<'g> {
    g: &'g SparseGraph,
    member: Vec<bool>,
    size: [usize; 2],
    /// Per node: stubs into the opposite side's member set.
    in_degree: Vec<u64>,
    internal: u64,
    degree_sum: [u64; 2],
    quality: f64,
    iteration: usize,
    max_iterations: usize,
    verify: bool,
    max_drift: f64,
}

fn side_slot(s: Side) -> usize {
    match s {
        Side::U => 0,
        Side::V => 1,
    }
}

impl<'g> AnnealState<'g> {
    pub fn new(
        g: &'g SparseGraph,
        seed_community: &CommunityRef,
        max_iterations: usize,
    ) -> Result<Self, DetectError> {
        let quality = bipartite_quality(g, seed_community)?;
        let CommunityRef::Bipartite { u_side, v_side } = seed_community else {
            unreachable!("checked by bipartite_quality")
        };
        for (side, ids) in [(Side::U, u_side), (Side::V, v_side)] {
            if let Some(&id) = ids.iter().find(|&&id| g.side(id) != Some(side)) {
                return Err(GraphError::WrongSide { id, expected: side }.into());
            }
        }
        let mut member = vec![false; g.node_count()];
        let mut in_degree = vec![0u64; g.node_count()];
        for &x in u_side.iter().chain(v_side) {
            member[x] = true;
            for (y, w) in g.neighbors(x) {
                in_degree[y] += w;
            }
        }
        Ok(AnnealState {
            g,
            internal: u_side.iter().map(|&x| in_degree[x]).sum(),
            degree_sum: [g.subset_degree(u_side)?, g.subset_degree(v_side)?],
            member,
            size: [u_side.len(), v_side.len()],
            in_degree,
            quality,
            iteration: 0,
            max_iterations,
            verify: false,
            max_drift: 0.0,
        })
    }

    /// Recompute the quality from scratch after every move and track the
    /// largest discrepancy with the cached value.
    pub fn with_verification(mut self, on: bool) -> Self {
        self.verify = on;
        self
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn community(&self) -> CommunityRef {
        let nu = self.g.node_count_u();
        let u_side = (0..nu).filter(|&x| self.member[x]).collect();
        let v_side = (nu..self.g.node_count()).filter(|&x| self.member[x]).collect();
        CommunityRef::Bipartite { u_side, v_side }
    }

    fn side_of(&self, x: usize) -> usize {
        side_slot(self.g.side(x).expect("valid node"))
    }

    fn value(&self, internal: u64, degree_sum: [u64; 2], size: [usize; 2]) -> f64 {
        let m = self.g.edge_count() as f64;
        let null = degree_sum[0] as f64 * degree_sum[1] as f64 / m;
        (internal as f64 - null) / ((size[0] * size[1]) as f64).sqrt()
    }

    fn toggled(&self, x: usize) -> Option<(u64, [u64; 2], [usize; 2])> {
        let s = self.side_of(x);
        let (mut internal, mut degree_sum, mut size) = (self.internal, self.degree_sum, self.size);
        let d = self.g.degree(x);
        if self.member[x] {
            if size[s] == 1 {
                return None;
            }
            size[s] -= 1;
            internal -= self.in_degree[x];
            degree_sum[s] -= d;
        } else {
            size[s] += 1;
            internal += self.in_degree[x];
            degree_sum[s] += d;
        }
        Some((internal, degree_sum, size))
    }

    /// Quality change from toggling `x`; `-inf` if the toggle would empty
    /// a side.
    pub fn gain(&self, x: usize) -> f64 {
        match self.toggled(x) {
            Some((i, d, s)) => self.value(i, d, s) - self.quality,
            None => f64::NEG_INFINITY,
        }
    }

    pub fn toggle(&mut self, x: usize) {
        let (internal, degree_sum, size) = self.toggled(x).expect("toggle keeps both sides nonempty");
        self.internal = internal;
        self.degree_sum = degree_sum;
        self.size = size;
        self.member[x] = !self.member[x];
        let joined = self.member[x];
        for (y, w) in self.g.neighbors(x) {
            if joined {
                self.in_degree[y] += w;
            } else {
                self.in_degree[y] -= w;
            }
        }
        self.quality = self.value(internal, degree_sum, size);
        if self.verify {
            let fresh = bipartite_quality(self.g, &self.community()).expect("state stays valid");
            self.max_drift = self.max_drift.max((fresh - self.quality).abs());
        }
    }

    /// Samples one toggle with probability proportional to its positive
    /// gain. Returns the toggled node, or `None` at a local optimum or when
    /// the budget is spent.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        if self.iteration >= self.max_iterations {
            return None;
        }
        let (nodes, gains): (Vec<usize>, Vec<f64>) = (0..self.g.node_count())
            .map(|x| (x, self.gain(x)))
            .filter(|&(_, gain)| gain > GAIN_EPS)
            .unzip();
        if nodes.is_empty() {
            return None;
        }
        let pick = WeightedIndex::new(&gains).expect("positive finite gains").sample(rng);
        let x = nodes[pick];
        self.toggle(x);
        self.iteration += 1;
        Some(x)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        while self.step(rng).is_some() {}
    }
}

/// Greedy stochastic ascent of the bipartite quality from a seed community.
pub fn anneal_extract<R: Rng + ?Sized>(
    g: &SparseGraph,
    seed_community: &CommunityRef,
    max_iterations: usize,
    rng: &mut R,
) -> Result<CommunityRef, DetectError> {
    let mut state = AnnealState::new(g, seed_community, max_iterations)?;
    state.run(rng);
    Ok(state.community())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::rng::StreamRng;
    use rand::SeedableRng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SparseGraph {
        let mut b = GraphBuilder::unipartite(n);
        for &(u, v) in edges {
            b.add_edge(u, v, 1).unwrap();
        }
        b.build()
    }

    fn two_triangles() -> SparseGraph {
        graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    }

    fn bipartite(nu: usize, nv: usize, edges: &[(usize, usize)]) -> SparseGraph {
        let mut b = GraphBuilder::bipartite(nu, nv);
        for &(u, v) in edges {
            b.add_edge(u, nu + v, 1).unwrap();
        }
        b.build()
    }

    #[test]
    fn modularity_examples() {
        let g = two_triangles();
        let q = modularity(&g, &Partition::from_labels(&[0, 0, 0, 1, 1, 1])).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
        let q = modularity(&g, &Partition::from_labels(&[0; 6])).unwrap();
        assert!(q.abs() < 1e-15);
        let q = modularity(&g, &Partition::singletons(6)).unwrap();
        assert!((q + 6.0 * (2.0f64 / 12.0).powi(2)).abs() < 1e-15);
        assert_eq!(
            modularity(&graph(3, &[]), &Partition::singletons(3)),
            Err(DetectError::EmptyGraph)
        );
        assert!(modularity(&g, &Partition::singletons(2)).is_err());
    }

    #[test]
    fn modularity_counts_self_loops() {
        // one loop at 0 plus edge 0-1: m2 = 4, internal of {0,1} = 4
        let g = graph(2, &[(0, 0), (0, 1)]);
        let q = modularity(&g, &Partition::from_labels(&[0, 0])).unwrap();
        assert!(q.abs() < 1e-15);
        let q = modularity(&g, &Partition::singletons(2)).unwrap();
        assert!((q - (2.0 / 4.0 - (9.0 + 1.0) / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn louvain_finds_components() {
        let g = two_triangles();
        for seed in 0..5 {
            let r = louvain_detailed(&g, seed).unwrap();
            assert_eq!(r.partition.community_count(), 2);
            let a = r.partition.assignment();
            assert!(a[0] == a[1] && a[1] == a[2] && a[3] == a[4] && a[4] == a[5] && a[0] != a[3]);
            assert!((r.modularity - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn louvain_errors_and_edgeless() {
        let b = bipartite(2, 2, &[(0, 0)]);
        assert_eq!(louvain(&b, 0), Err(DetectError::BipartiteGraph));
        assert_eq!(louvain(&graph(0, &[]), 0), Err(DetectError::EmptyGraph));
        assert_eq!(louvain(&graph(3, &[]), 0).unwrap(), Partition::singletons(3));
    }

    #[test]
    fn louvain_levels_nondecreasing_and_match_scratch() {
        let mut rng = StreamRng::seed_from_u64(2);
        let degrees = crate::generators::sample_degrees(
            &crate::generators::DegreeSequenceSpec::new(300, -2.0, 3, 20),
            &mut rng,
        )
        .unwrap();
        let g = crate::generators::configuration_model(&degrees, &mut rng).unwrap();
        for seed in 0..4 {
            let r = louvain_detailed(&g, seed).unwrap();
            for w in r.level_modularity.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            let fresh = modularity(&g, &r.partition).unwrap();
            assert!((fresh - r.modularity).abs() < 1e-9);
            assert_eq!(r, louvain_detailed(&g, seed).unwrap());
        }
    }

    #[test]
    fn quality_examples() {
        let g = bipartite(1, 1, &[(0, 0)]);
        let c = CommunityRef::Bipartite {
            u_side: vec![0],
            v_side: vec![1],
        };
        assert!(bipartite_quality(&g, &c).unwrap().abs() < 1e-15);

        let g = bipartite(3, 3, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]);
        let c = CommunityRef::Bipartite {
            u_side: vec![0, 1],
            v_side: vec![3, 4],
        };
        assert!((bipartite_quality(&g, &c).unwrap() - 0.4).abs() < 1e-15);

        let c = CommunityRef::Bipartite {
            u_side: vec![2],
            v_side: vec![3],
        };
        assert!(bipartite_quality(&g, &c).unwrap() < 0.0);

        let empty = CommunityRef::Bipartite {
            u_side: vec![],
            v_side: vec![3],
        };
        assert_eq!(bipartite_quality(&g, &empty), Err(DetectError::EmptySide));
        let uni = graph(2, &[(0, 1)]);
        assert_eq!(
            bipartite_quality(&uni, &CommunityRef::Unipartite(vec![0])),
            Err(DetectError::UnipartiteGraph)
        );
    }

    fn random_bipartite(seed: u64, nu: usize, nv: usize, p: f64) -> SparseGraph {
        let mut rng = StreamRng::seed_from_u64(seed);
        let mut b = GraphBuilder::bipartite(nu, nv);
        for u in 0..nu {
            for v in 0..nv {
                if rng.gen_bool(p) {
                    b.add_edge(u, nu + v, rng.gen_range(1..3)).unwrap();
                }
            }
        }
        b.add_edge(0, nu, 1).unwrap();
        b.build()
    }

    #[test]
    fn gains_match_brute_force() {
        for seed in 0..20 {
            let g = random_bipartite(seed, 12, 15, 0.3);
            let c = CommunityRef::Bipartite {
                u_side: vec![0, 3, 4],
                v_side: vec![12, 13, 20],
            };
            let state = AnnealState::new(&g, &c, 100).unwrap();
            let base = bipartite_quality(&g, &c).unwrap();
            for x in 0..g.node_count() {
                let mut members = c.members();
                match members.binary_search(&x) {
                    Ok(i) => {
                        members.remove(i);
                    }
                    Err(i) => members.insert(i, x),
                }
                let toggled = CommunityRef::from_nodes(&g, members).unwrap();
                let expected = match bipartite_quality(&g, &toggled) {
                    Ok(q) => q - base,
                    Err(DetectError::EmptySide) => f64::NEG_INFINITY,
                    Err(e) => panic!("{e}"),
                };
                let got = state.gain(x);
                assert!(
                    got == expected || (got - expected).abs() < 1e-9,
                    "node {x}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn annealing_quality_tracks_scratch_and_increases() {
        for seed in 0..10 {
            let g = random_bipartite(seed, 15, 15, 0.25);
            let c = CommunityRef::Bipartite {
                u_side: vec![1, 2],
                v_side: vec![15, 16],
            };
            let mut state = AnnealState::new(&g, &c, 1000).unwrap().with_verification(true);
            let mut rng = StreamRng::seed_from_u64(seed);
            let mut last = state.quality();
            while state.step(&mut rng).is_some() {
                assert!(state.quality() > last);
                last = state.quality();
            }
            assert!(state.max_drift() < 1e-9);
            assert!((0..g.node_count()).all(|x| state.gain(x) <= GAIN_EPS));
        }
    }

    #[test]
    fn local_optimum_and_zero_budget_return_seed() {
        let mut rng = StreamRng::seed_from_u64(0);
        let g = bipartite(3, 3, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]);
        let c = CommunityRef::Bipartite {
            u_side: vec![0, 1],
            v_side: vec![3, 4],
        };
        let mut state = AnnealState::new(&g, &c, 100).unwrap();
        assert_eq!(state.step(&mut rng), None);
        assert_eq!(state.community(), c);

        let weak = CommunityRef::Bipartite {
            u_side: vec![2],
            v_side: vec![3],
        };
        assert_eq!(anneal_extract(&g, &weak, 0, &mut rng).unwrap(), weak);
        assert_ne!(anneal_extract(&g, &weak, 100, &mut rng).unwrap(), weak);
        let bad = CommunityRef::Bipartite {
            u_side: vec![],
            v_side: vec![3],
        };
        assert_eq!(anneal_extract(&g, &bad, 10, &mut rng), Err(DetectError::EmptySide));
    }

    #[test]
    fn recovers_dense_planted_block() {
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = StreamRng::seed_from_u64(seed);
            let (g, planted) =
                crate::generators::planted_bipartite_block(100, 100, 12, 12, 0.9, 0.01, &mut rng).unwrap();
            let CommunityRef::Bipartite { u_side, v_side } = &planted else {
                unreachable!()
            };
            let seed_c = CommunityRef::Bipartite {
                u_side: u_side[1..].to_vec(),
                v_side: v_side[1..].to_vec(),
            };
            let found = anneal_extract(&g, &seed_c, default_max_iterations(&g), &mut rng).unwrap();
            if found.jaccard(&planted) >= 0.8 {
                hits += 1;
            }
        }
        assert_eq!(hits, 20);
    }
}
