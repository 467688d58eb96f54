//! Random graphs for calibration and power experiments.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{CommunityRef, Partition};
use crate::graph::{GraphBuilder, GraphError, SparseGraph};
use crate::rng::substream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid degree specification: {0}")]
    InvalidDegreeSpec(String),
    #[error("degree sum parity cannot be fixed with d_min = d_max = {0}")]
    InfeasibleParity(u64),
    #[error("degree sum {0} is odd")]
    OddDegreeSum(u64),
    #[error("invalid benchmark specification: {0}")]
    InvalidLfrSpec(String),
    #[error("invalid planted block: {0}")]
    InvalidBlock(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Truncated power-law degree distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeSequenceSpec {
    pub n: usize,
    pub exponent: f64,
    pub d_min: u64,
    pub d_max: u64,
}

impl DegreeSequenceSpec {
    pub fn new(n: usize, exponent: f64, d_min: u64, d_max: u64) -> Self {
        DegreeSequenceSpec {
            n,
            exponent,
            d_min,
            d_max,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::InvalidDegreeSpec(m.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.d_min < 1 {
            return bad("d_min must be at least 1");
        }
        if self.d_max < self.d_min {
            return bad("d_max below d_min");
        }
        if !self.exponent.is_finite() {
            return bad("exponent must be finite");
        }
        Ok(())
    }

    /// Mean of the truncated distribution.
    pub fn expected_mean(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for d in self.d_min..=self.d_max {
            let w = (d as f64).powf(self.exponent);
            num += d as f64 * w;
            den += w;
        }
        num / den
    }
}

/// `n` i.i.d. degrees with `P(d) ∝ d^exponent` on `[d_min, d_max]`. An odd
/// total is fixed by moving one uniformly chosen node up by one, or down by
/// one if it already sits at `d_max`.
pub fn sample_degrees<R: Rng + ?Sized>(
    spec: &DegreeSequenceSpec,
    rng: &mut R,
) -> Result<Vec<u64>, GeneratorError> {
    spec.validate()?;
    if spec.d_min == spec.d_max && spec.n as u64 * spec.d_min % 2 == 1 {
        return Err(GeneratorError::InfeasibleParity(spec.d_min));
    }
    let values: Vec<u64> = (spec.d_min..=spec.d_max).collect();
    let weights = values.iter().map(|&d| (d as f64).powf(spec.exponent));
    let dist = WeightedIndex::new(weights)
        .map_err(|e| GeneratorError::InvalidDegreeSpec(e.to_string()))?;
    let mut degrees: Vec<u64> = (0..spec.n).map(|_| values[dist.sample(rng)]).collect();
    if degrees.iter().sum::<u64>() % 2 == 1 {
        let i = rng.gen_range(0..spec.n);
        if degrees[i] < spec.d_max {
            degrees[i] += 1;
        } else {
            degrees[i] -= 1;
        }
    }
    Ok(degrees)
}

fn pair_stubs(stubs: &[usize], builder: &mut GraphBuilder) -> Result<(), GraphError> {
    for pair in stubs.chunks_exact(2) {
        builder.add_edge(pair[0], pair[1], 1)?;
    }
    Ok(())
}

/// Uniform random stub matching. Self-loops and multi-edges are kept.
pub fn configuration_model<R: Rng + ?Sized>(
    degrees: &[u64],
    rng: &mut R,
) -> Result<SparseGraph, GeneratorError> {
    let total: u64 = degrees.iter().sum();
    if total % 2 == 1 {
        return Err(GeneratorError::OddDegreeSum(total));
    }
    let mut stubs: Vec<usize> = Vec::with_capacity(total as usize);
    for (u, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat(u).take(d as usize));
    }
    stubs.shuffle(rng);
    let mut builder = GraphBuilder::unipartite(degrees.len());
    pair_stubs(&stubs, &mut builder)?;
    Ok(builder.build())
}

/// Planted-partition benchmark in the style of LFR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfrSpec {
    pub n: usize,
    pub mu: f64,
    pub community_size_range: (usize, usize),
    pub degree_spec: DegreeSequenceSpec,
    pub seed: u64,
}

impl LfrSpec {
    /// Degrees default to a power law with exponent -2 on `[10, 50]`.
    pub fn new(n: usize, mu: f64, community_size_range: (usize, usize), seed: u64) -> Self {
        LfrSpec {
            n,
            mu,
            community_size_range,
            degree_spec: DegreeSequenceSpec::new(n, -2.0, 10, 50),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidLfrSpec(m));
        let (c_min, c_max) = self.community_size_range;
        if !(0.0..=1.0).contains(&self.mu) {
            return bad(format!("mu = {} outside [0, 1]", self.mu));
        }
        if c_min < 3 {
            return bad(format!("minimum community size {c_min} below 3"));
        }
        if c_max < c_min {
            return bad(format!("community size range [{c_min}, {c_max}] is empty"));
        }
        if c_max > self.n || c_min > self.n {
            return bad(format!("community size {c_max} exceeds n = {}", self.n));
        }
        if self.degree_spec.n != self.n {
            return bad("degree spec node count differs from n".to_string());
        }
        self.degree_spec.validate()
    }
}

/// Bookkeeping from the stub-split construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LfrMeta {
    pub community_sizes: Vec<usize>,
    /// Internal stubs moved to the external pool to make a community's
    /// internal stub count even.
    pub parity_moves: usize,
    /// Stubs added to nodes where no stub could be moved (`mu = 0`, or an
    /// odd external pool).
    pub degree_adjustments: usize,
    /// External pairs left inside one community after rewiring.
    pub unresolved_external_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct LfrGraph {
    pub graph: SparseGraph,
    pub partition: Partition,
    pub meta: LfrMeta,
}

impl LfrGraph {
    pub fn communities(&self) -> Vec<CommunityRef> {
        self.partition
            .communities()
            .into_iter()
            .map(CommunityRef::Unipartite)
            .collect()
    }
}

fn community_sizes<R: Rng + ?Sized>(n: usize, (c_min, c_max): (usize, usize), rng: &mut R) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        let s = rng.gen_range(c_min..=c_max);
        if remaining - s.min(remaining) < c_min {
            match sizes.last_mut() {
                Some(last) if remaining < c_min => *last += remaining,
                _ => sizes.push(remaining),
            }
            break;
        }
        sizes.push(s);
        remaining -= s;
    }
    sizes
}

/// LFR-style graph: each node's stubs are split into `floor(mu d)` plus a
/// Bernoulli on the fractional part external stubs, the rest internal.
/// Internal stubs are matched inside each community and external stubs
/// across the graph, with same-community external pairs rewired where
/// possible.
pub fn lfr_like(spec: &LfrSpec) -> Result<LfrGraph, GeneratorError> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = substream(spec.seed, &[0]);
    let sizes = community_sizes(n, spec.community_size_range, &mut rng);
    let mut degrees = sample_degrees(&spec.degree_spec, &mut rng)?;

    let mut external: Vec<u64> = degrees
        .iter()
        .map(|&d| {
            let x = spec.mu * d as f64;
            let base = x.floor();
            let extra = rng.gen_bool((x - base).clamp(0.0, 1.0));
            (base as u64 + extra as u64).min(d)
        })
        .collect();
    let internal: Vec<u64> = degrees.iter().zip(&external).map(|(d, e)| d - e).collect();

    // Largest internal degrees first; prefer communities that can hold them.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| std::cmp::Reverse(internal[u]));
    let mut free = sizes.clone();
    let mut assignment = vec![0usize; n];
    for &u in &order {
        let fits = |c: usize| free[c] > 0 && sizes[c] as u64 > internal[u];
        let any_fit = (0..sizes.len()).any(fits);
        let weights: Vec<usize> = (0..sizes.len())
            .map(|c| if (!any_fit && free[c] > 0) || fits(c) { free[c] } else { 0 })
            .collect();
        let c = WeightedIndex::new(&weights)
            .expect("free slots remain while nodes are unassigned")
            .sample(&mut rng);
        free[c] -= 1;
        assignment[u] = c;
    }
    let partition = Partition::from_labels(&assignment);
    let members = partition.communities();

    let mut meta = LfrMeta {
        community_sizes: members.iter().map(Vec::len).collect(),
        ..LfrMeta::default()
    };
    let mut internal = internal;
    for group in &members {
        if group.iter().map(|&u| internal[u]).sum::<u64>() % 2 == 0 {
            continue;
        }
        let movable: Vec<usize> = group.iter().copied().filter(|&u| internal[u] > 0).collect();
        if spec.mu > 0.0 && !movable.is_empty() {
            let &u = movable.choose(&mut rng).expect("nonempty");
            internal[u] -= 1;
            external[u] += 1;
            meta.parity_moves += 1;
        } else {
            let &u = group.choose(&mut rng).expect("communities are nonempty");
            internal[u] += 1;
            degrees[u] += 1;
            meta.degree_adjustments += 1;
        }
    }
    if external.iter().sum::<u64>() % 2 == 1 {
        let u = rng.gen_range(0..n);
        external[u] += 1;
        degrees[u] += 1;
        meta.degree_adjustments += 1;
    }

    let mut builder = GraphBuilder::unipartite(n);
    for group in &members {
        let mut stubs: Vec<usize> = Vec::new();
        for &u in group {
            stubs.extend(std::iter::repeat(u).take(internal[u] as usize));
        }
        stubs.shuffle(&mut rng);
        pair_stubs(&stubs, &mut builder)?;
    }

    let mut stubs: Vec<usize> = Vec::new();
    for (u, &k) in external.iter().enumerate() {
        stubs.extend(std::iter::repeat(u).take(k as usize));
    }
    stubs.shuffle(&mut rng);
    let pairs = stubs.len() / 2;
    let same = |s: &[usize], i: usize| assignment[s[2 * i]] == assignment[s[2 * i + 1]];
    for i in 0..pairs {
        let mut attempts = 0;
        while same(&stubs, i) && attempts < 50 {
            let j = rng.gen_range(0..pairs);
            let (a, b, c, d) = (stubs[2 * i], stubs[2 * i + 1], stubs[2 * j], stubs[2 * j + 1]);
            if assignment[a] != assignment[d] && assignment[c] != assignment[b] {
                stubs[2 * i + 1] = d;
                stubs[2 * j + 1] = b;
            }
            attempts += 1;
        }
    }
    meta.unresolved_external_pairs = (0..pairs).filter(|&i| same(&stubs, i)).count();
    pair_stubs(&stubs, &mut builder)?;

    Ok(LfrGraph {
        graph: builder.build(),
        partition,
        meta,
    })
}

/// Fraction of all stubs whose edge leaves the owning node's community.
pub fn realized_mixing(g: &SparseGraph, partition: &Partition) -> f64 {
    let mut outside = 0u64;
    for u in 0..g.node_count() {
        let c = partition.community_of(u);
        outside += g
            .neighbors(u)
            .filter(|&(v, _)| partition.community_of(v) != c)
            .map(|(_, w)| w)
            .sum::<u64>();
    }
    if g.total_degree() == 0 {
        0.0
    } else {
        outside as f64 / g.total_degree() as f64
    }
}

/// Bipartite graph with a planted dense block on the first `block_u` nodes
/// of side `U` and the first `block_v` nodes of side `V`.
pub fn planted_bipartite_block<R: Rng + ?Sized>(
    nu: usize,
    nv: usize,
    block_u: usize,
    block_v: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> Result<(SparseGraph, CommunityRef), GeneratorError> {
    let bad = |m: String| Err(GeneratorError::InvalidBlock(m));
    if block_u > nu || block_v > nv {
        return bad(format!("block {block_u}x{block_v} exceeds sides {nu}x{nv}"));
    }
    if block_u == 0 || block_v == 0 {
        return bad("block sides must be nonempty".to_string());
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return bad(format!("probability {p} outside [0, 1]"));
        }
    }
    let mut builder = GraphBuilder::bipartite(nu, nv);
    for a in 0..nu {
        for b in 0..nv {
            let p = if a < block_u && b < block_v { p_in } else { p_out };
            if rng.gen_bool(p) {
                builder.add_edge(a, nu + b, 1)?;
            }
        }
    }
    let community = CommunityRef::Bipartite {
        u_side: (0..block_u).collect(),
        v_side: (nu..nu + block_v).collect(),
    };
    Ok((builder.build(), community))
}
