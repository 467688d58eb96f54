//! Significance scoring of optimized communities.
//!
//! Under the conditional configuration-model null, the in-community degree
//! of an exterior node is hypergeometric. A community member is scored as
//! if it were exterior: it is removed from the community first, and its
//! observed in-degree to the rest of the community is compared with that
//! law. The worst member (lowest lower-tail probability) is then scored by
//! its upper-tail probability `g` against the minimum of `|C'| + 1`
//! uniforms. It is dropped and the process repeats over the worst `ceil(p |C|)` members. The score
//! of a run is the smallest value seen; the reported score is the median
//! over independently randomized runs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::CommunityRef;
use crate::graph::{GraphError, Side, SparseGraph};
use crate::rng::{derive_seed, substream};
use crate::stats::{hypergeom_cdf_step, min_uniform_logcdf, HypergeomParams, LogProb, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FocsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("node {0} is inside the community")]
    NodeInCommunity(usize),
    #[error("node {0} is not a member of the community")]
    NodeNotInCommunity(usize),
    #[error("community is empty")]
    EmptyCommunity,
    #[error("community complement is empty")]
    EmptyComplement,
    #[error("community of size {size} is too small to score")]
    CommunityTooSmall { size: usize },
    #[error("community kind does not match the graph mode")]
    ModeMismatch,
    #[error("test fraction {0} outside (0, 1]")]
    InvalidTestFraction(f64),
    #[error("at least one resampling run is required")]
    ZeroResamples,
}

/// How a node's discrete CDF value is turned into `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrawMode {
    /// Uniform draw over the CDF step at the observed value.
    #[default]
    Randomized,
    /// The CDF itself, `P(X <= observed)`.
    Point,
}

/// Scoring knobs shared by single and batch scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Fraction `p` of members tested.
    pub test_fraction: f64,
    /// Number `R` of resampling runs.
    pub resamples: usize,
    pub seed: u64,
    pub draw_mode: DrawMode,
    /// Recompute null parameters from scratch every iteration instead of
    /// updating them incrementally. Debug aid; results are identical.
    pub recompute: bool,
}

pub const DEFAULT_TEST_FRACTION: f64 = 0.25;
pub const DEFAULT_RESAMPLES: usize = 31;

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            test_fraction: DEFAULT_TEST_FRACTION,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            draw_mode: DrawMode::Randomized,
            recompute: false,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), FocsError> {
        let p = self.test_fraction;
        if !(p > 0.0 && p <= 1.0) {
            return Err(FocsError::InvalidTestFraction(p));
        }
        if self.resamples == 0 {
            return Err(FocsError::ZeroResamples);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub graph: &'a SparseGraph,
    pub community: &'a CommunityRef,
    pub config: ScoreConfig,
}

/// One pass of the removal loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub worst_node: usize,
    /// Randomized upper-tail probability of the worst node's in-degree.
    pub log_g: LogProb,
    /// `ln f(C)` for the community before removal.
    pub log_f: LogProb,
    /// Order-statistic count `|C'| + 1`.
    pub order_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The community covers the whole graph; there is nothing to compare to.
    EmptyExterior,
    /// No member can be removed without emptying the community or a side.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub minimum: LogProb,
    pub iterations: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// `-log10` of the median run score.
    pub neg_log10_score: f64,
    pub log_score: LogProb,
    pub per_run_scores: Vec<LogProb>,
    pub runs: Vec<RunTrace>,
    pub community_size: usize,
    pub tested_count: usize,
}

impl ScoreReport {
    /// Score strictly below `alpha`.
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.log_score.ln() < alpha.ln()
    }
}

/// `ceil(p * size)`, at least 1, tolerant of representation error in `p`.
pub fn tested_count(test_fraction: f64, size: usize) -> usize {
    let raw = test_fraction * size as f64;
    ((raw - 1e-9).ceil().max(1.0) as usize).min(size.max(1))
}

fn membership(g: &SparseGraph, nodes: &[usize]) -> Result<Vec<bool>, FocsError> {
    let mut mask = vec![false; g.node_count()];
    for &v in nodes {
        g.check_node(v)?;
        if std::mem::replace(&mut mask[v], true) {
            return Err(GraphError::DuplicateNode(v).into());
        }
    }
    Ok(mask)
}

/// Null law of `d_u(C)` for an exterior node `u` of a unipartite community:
/// `K = d_C(C')`, `M = d_{C'}(C')`, `n = d_u`.
pub fn null_params_unipartite(
    g: &SparseGraph,
    community: &[usize],
    u: usize,
) -> Result<HypergeomParams, FocsError> {
    g.check_node(u)?;
    let mask = membership(g, community)?;
    if mask[u] {
        return Err(FocsError::NodeInCommunity(u));
    }
    if community.is_empty() {
        return Err(FocsError::EmptyCommunity);
    }
    let subset_degree: u64 = community.iter().map(|&b| g.degree(b)).sum();
    let internal: u64 = community.iter().map(|&b| g.degree_into_mask(b, &mask)).sum();
    let cross = subset_degree - internal;
    let exterior_internal = g.total_degree() - subset_degree - cross;
    Ok(HypergeomParams::new(cross, exterior_internal, g.degree(u))?)
}

/// Null law of `d_u(C_V)` for an exterior node `u` on `side` of a bipartite
/// community: for side `U`, `K = d_{C_V}(C_U')`, `M = d_{C_V'}(C_U')`,
/// `n = d_u`; side `V` swaps the roles.
pub fn null_params_bipartite(
    g: &SparseGraph,
    community: &CommunityRef,
    u: usize,
    side: Side,
) -> Result<HypergeomParams, FocsError> {
    let CommunityRef::Bipartite { u_side, v_side } = community else {
        return Err(FocsError::ModeMismatch);
    };
    if !g.is_bipartite() {
        return Err(FocsError::ModeMismatch);
    }
    g.check_node(u)?;
    if g.side(u) != Some(side) {
        return Err(GraphError::WrongSide { id: u, expected: side }.into());
    }
    let (own, other) = match side {
        Side::U => (u_side, v_side),
        Side::V => (v_side, u_side),
    };
    let own_mask = membership(g, own)?;
    if own_mask[u] {
        return Err(FocsError::NodeInCommunity(u));
    }
    if own.len() == g.side_range(side).len() {
        return Err(FocsError::EmptyComplement);
    }
    let other_mask = membership(g, other)?;
    let (mut cross, mut exterior_degree) = (0u64, 0u64);
    for a in g.side_range(side).filter(|&a| !own_mask[a]) {
        cross += g.degree_into_mask(a, &other_mask);
        exterior_degree += g.degree(a);
    }
    Ok(HypergeomParams::new(cross, exterior_degree - cross, g.degree(u))?)
}

/// Null parameters and observed in-degree for a member `u`, computed from
/// scratch after moving `u` to the exterior.
pub fn member_null_params(
    g: &SparseGraph,
    community: &CommunityRef,
    u: usize,
) -> Result<(HypergeomParams, u64), FocsError> {
    match community {
        CommunityRef::Unipartite(nodes) => {
            if g.is_bipartite() {
                return Err(FocsError::ModeMismatch);
            }
            let pos = nodes
                .iter()
                .position(|&v| v == u)
                .ok_or(FocsError::NodeNotInCommunity(u))?;
            if nodes.len() < 2 {
                return Err(FocsError::CommunityTooSmall { size: nodes.len() });
            }
            let mut shrunk = nodes.clone();
            shrunk.remove(pos);
            let params = null_params_unipartite(g, &shrunk, u)?;
            let observed = g.degree_into(u, &shrunk)?;
            Ok((params, observed))
        }
        CommunityRef::Bipartite { u_side, v_side } => {
            g.check_node(u)?;
            let side = g.side(u).ok_or(FocsError::ModeMismatch)?;
            let (own, other) = match side {
                Side::U => (u_side, v_side),
                Side::V => (v_side, u_side),
            };
            let pos = own
                .iter()
                .position(|&v| v == u)
                .ok_or(FocsError::NodeNotInCommunity(u))?;
            if own.len() < 2 || other.is_empty() {
                return Err(FocsError::CommunityTooSmall {
                    size: community.len(),
                });
            }
            let mut shrunk_own = own.clone();
            shrunk_own.remove(pos);
            let shrunk = match side {
                Side::U => CommunityRef::Bipartite {
                    u_side: shrunk_own,
                    v_side: other.clone(),
                },
                Side::V => CommunityRef::Bipartite {
                    u_side: other.clone(),
                    v_side: shrunk_own,
                },
            };
            let params = null_params_bipartite(g, &shrunk, u, side)?;
            let observed = g.degree_into(u, other)?;
            Ok((params, observed))
        }
    }
}

/// Randomized lower-tail probability `g` of a member's in-community degree.
pub fn node_gscore<R: Rng + ?Sized>(
    g: &SparseGraph,
    community: &CommunityRef,
    u: usize,
    rng: &mut R,
) -> Result<LogProb, FocsError> {
    node_gscore_with(g, community, u, DrawMode::Randomized, rng)
}

pub fn node_gscore_with<R: Rng + ?Sized>(
    g: &SparseGraph,
    community: &CommunityRef,
    u: usize,
    mode: DrawMode,
    rng: &mut R,
) -> Result<LogProb, FocsError> {
    let (params, observed) = member_null_params(g, community, u)?;
    let step = hypergeom_cdf_step(observed, &params)?;
    Ok(match mode {
        DrawMode::Randomized => step.draw(rng),
        DrawMode::Point => step.upper(),
    })
}

/// Incrementally maintained community during the removal loop.
trait ShrinkingCommunity {
    /// Members that may be removed, ascending.
    fn candidates(&self) -> Vec<usize>;
    fn exterior_count(&self) -> u64;
    fn member_params(&self, u: usize) -> (HypergeomParams, u64);
    fn remove(&mut self, u: usize);
    fn snapshot(&self) -> CommunityRef;
}

struct UnipartiteState<'g> {
    g: &'g SparseGraph,
    members: Vec<usize>,
    /// `d_v(C)` for every node.
    in_degree: Vec<u64>,
    subset_degree: u64,
    /// `d_C(C)`.
    internal: u64,
}

impl<'g> UnipartiteState<'g> {
    fn new(g: &'g SparseGraph, nodes: &[usize]) -> Self {
        let mut in_degree = vec![0u64; g.node_count()];
        for &b in nodes {
            for (v, w) in g.neighbors(b) {
                in_degree[v] += w;
            }
        }
        UnipartiteState {
            g,
            members: nodes.to_vec(),
            subset_degree: nodes.iter().map(|&b| g.degree(b)).sum(),
            internal: nodes.iter().map(|&b| in_degree[b]).sum(),
            in_degree,
        }
    }
}

impl ShrinkingCommunity for UnipartiteState<'_> {
    fn candidates(&self) -> Vec<usize> {
        if self.members.len() >= 2 {
            self.members.clone()
        } else {
            Vec::new()
        }
    }

    fn exterior_count(&self) -> u64 {
        (self.g.node_count() - self.members.len()) as u64
    }

    fn member_params(&self, u: usize) -> (HypergeomParams, u64) {
        let loops = self.g.stub_weight(u, u);
        let observed = self.in_degree[u] - loops;
        let degree = self.g.degree(u);
        let shrunk_degree = self.subset_degree - degree;
        let shrunk_internal = self.internal - 2 * observed - loops;
        let cross = shrunk_degree - shrunk_internal;
        let exterior_internal = self.g.total_degree() - shrunk_degree - cross;
        let params = HypergeomParams::new(cross, exterior_internal, degree)
            .expect("stub partition keeps draws within the population");
        (params, observed)
    }

    fn remove(&mut self, u: usize) {
        let loops = self.g.stub_weight(u, u);
        let observed = self.in_degree[u] - loops;
        self.internal -= 2 * observed + loops;
        self.subset_degree -= self.g.degree(u);
        for (v, w) in self.g.neighbors(u) {
            self.in_degree[v] -= w;
        }
        let pos = self.members.binary_search(&u).expect("removed node is a member");
        self.members.remove(pos);
    }

    fn snapshot(&self) -> CommunityRef {
        CommunityRef::Unipartite(self.members.clone())
    }
}

struct BipartiteState<'g> {
    g: &'g SparseGraph,
    members: Vec<usize>,
    size: [usize; 2],
    /// `d_x(C)` for every node; for bipartite graphs only the opposite side
    /// contributes.
    in_degree: Vec<u64>,
    /// Per side: stubs from that side's exterior into the opposite side's
    /// community.
    exterior_cross: [u64; 2],
    /// Per side: total degree of that side's exterior.
    exterior_degree: [u64; 2],
}

fn side_index(s: Side) -> usize {
    match s {
        Side::U => 0,
        Side::V => 1,
    }
}

impl<'g> BipartiteState<'g> {
    fn new(g: &'g SparseGraph, u_side: &[usize], v_side: &[usize]) -> Self {
        let mut member = vec![false; g.node_count()];
        let mut in_degree = vec![0u64; g.node_count()];
        for &b in u_side.iter().chain(v_side) {
            member[b] = true;
            for (v, w) in g.neighbors(b) {
                in_degree[v] += w;
            }
        }
        let mut exterior_cross = [0u64; 2];
        let mut exterior_degree = [0u64; 2];
        for side in [Side::U, Side::V] {
            let s = side_index(side);
            for a in g.side_range(side).filter(|&a| !member[a]) {
                exterior_cross[s] += in_degree[a];
                exterior_degree[s] += g.degree(a);
            }
        }
        BipartiteState {
            g,
            members: u_side.iter().chain(v_side).copied().collect(),
            size: [u_side.len(), v_side.len()],
            in_degree,
            exterior_cross,
            exterior_degree,
        }
    }

    fn side_of(&self, u: usize) -> usize {
        if u < self.g.node_count_u() {
            0
        } else {
            1
        }
    }
}

impl ShrinkingCommunity for BipartiteState<'_> {
    fn candidates(&self) -> Vec<usize> {
        self.members
            .iter()
            .copied()
            .filter(|&u| self.size[self.side_of(u)] >= 2)
            .collect()
    }

    fn exterior_count(&self) -> u64 {
        (self.g.node_count() - self.size[0] - self.size[1]) as u64
    }

    fn member_params(&self, u: usize) -> (HypergeomParams, u64) {
        let s = self.side_of(u);
        let degree = self.g.degree(u);
        let observed = self.in_degree[u];
        let cross = self.exterior_cross[s] + observed;
        let params = HypergeomParams::new(cross, self.exterior_degree[s] + degree - cross, degree)
            .expect("stub partition keeps draws within the population");
        (params, observed)
    }

    fn remove(&mut self, u: usize) {
        let s = self.side_of(u);
        let degree = self.g.degree(u);
        let observed = self.in_degree[u];
        self.exterior_cross[s] += observed;
        self.exterior_degree[s] += degree;
        self.exterior_cross[1 - s] -= degree - observed;
        for (v, w) in self.g.neighbors(u) {
            self.in_degree[v] -= w;
        }
        self.size[s] -= 1;
        let pos = self.members.binary_search(&u).expect("removed node is a member");
        self.members.remove(pos);
    }

    fn snapshot(&self) -> CommunityRef {
        let split = self.size[0];
        CommunityRef::Bipartite {
            u_side: self.members[..split].to_vec(),
            v_side: self.members[split..].to_vec(),
        }
    }
}

/// Checks that `community` can be scored on `g`.
pub fn validate_community(g: &SparseGraph, community: &CommunityRef) -> Result<(), FocsError> {
    for u in community.members() {
        g.check_node(u)?;
    }
    match community {
        CommunityRef::Unipartite(nodes) => {
            if g.is_bipartite() {
                return Err(FocsError::ModeMismatch);
            }
            if nodes.is_empty() {
                return Err(FocsError::EmptyCommunity);
            }
            if nodes.len() < 2 {
                return Err(FocsError::CommunityTooSmall { size: nodes.len() });
            }
            membership(g, nodes)?;
        }
        CommunityRef::Bipartite { u_side, v_side } => {
            if !g.is_bipartite() {
                return Err(FocsError::ModeMismatch);
            }
            if u_side.is_empty() && v_side.is_empty() {
                return Err(FocsError::EmptyCommunity);
            }
            if u_side.is_empty() || v_side.is_empty() {
                return Err(FocsError::CommunityTooSmall {
                    size: community.len(),
                });
            }
            for (side, ids) in [(Side::U, u_side), (Side::V, v_side)] {
                if let Some(&id) = ids.iter().find(|&&id| g.side(id) != Some(side)) {
                    return Err(GraphError::WrongSide { id, expected: side }.into());
                }
            }
            membership(g, &community.members())?;
        }
    }
    Ok(())
}

fn run_loop<S: ShrinkingCommunity, R: Rng + ?Sized>(
    g: &SparseGraph,
    mut state: S,
    tested: usize,
    config: &ScoreConfig,
    rng: &mut R,
) -> Result<RunTrace, FocsError> {
    let mut trace = RunTrace {
        minimum: LogProb::ONE,
        iterations: Vec::with_capacity(tested),
        stop: None,
    };
    if state.exterior_count() == 0 {
        trace.stop = Some(StopReason::EmptyExterior);
        return Ok(trace);
    }
    for _ in 0..tested {
        let candidates = state.candidates();
        if candidates.is_empty() {
            trace.stop = Some(StopReason::Exhausted);
            break;
        }
        let snapshot = config.recompute.then(|| state.snapshot());
        let mut worst: Option<(usize, LogProb)> = None;
        for u in candidates {
            let (params, observed) = match &snapshot {
                Some(current) => member_null_params(g, current, u)?,
                None => state.member_params(u),
            };
            let step = hypergeom_cdf_step(observed, &params)?;
            // the upper tail is one minus the lower draw, so its maximum
            // picks the same node while staying precise near one
            let log_g = match config.draw_mode {
                DrawMode::Randomized => step.draw_pair(rng).1,
                DrawMode::Point => step.survival(),
            };
            // strict comparison keeps the smallest id on ties
            if worst.map_or(true, |(_, best)| log_g > best) {
                worst = Some((u, log_g));
            }
        }
        let (w, log_g) = worst.expect("nonempty candidate list");
        let order_count = state.exterior_count() + 1;
        let log_f = min_uniform_logcdf(log_g, order_count)?;
        trace.minimum = trace.minimum.min(log_f);
        trace.iterations.push(IterationRecord {
            worst_node: w,
            log_g,
            log_f,
            order_count,
        });
        state.remove(w);
    }
    Ok(trace)
}

fn single_run<R: Rng + ?Sized>(
    g: &SparseGraph,
    community: &CommunityRef,
    config: &ScoreConfig,
    rng: &mut R,
) -> Result<RunTrace, FocsError> {
    validate_community(g, community)?;
    let tested = tested_count(config.test_fraction, community.len());
    match community {
        CommunityRef::Unipartite(nodes) => {
            run_loop(g, UnipartiteState::new(g, nodes), tested, config, rng)
        }
        CommunityRef::Bipartite { u_side, v_side } => {
            run_loop(g, BipartiteState::new(g, u_side, v_side), tested, config, rng)
        }
    }
}

/// One randomized pass over the worst `ceil(p |C|)` members.
pub fn focs_single_run<R: Rng + ?Sized>(
    g: &SparseGraph,
    community: &CommunityRef,
    test_fraction: f64,
    rng: &mut R,
) -> Result<RunTrace, FocsError> {
    let config = ScoreConfig {
        test_fraction,
        ..ScoreConfig::default()
    };
    config.validate()?;
    single_run(g, community, &config, rng)
}

/// Scores one community: `R` independent runs, median reported.
pub fn focs_score(request: &ScoreRequest<'_>) -> Result<ScoreReport, FocsError> {
    let ScoreRequest {
        graph,
        community,
        config,
    } = *request;
    config.validate()?;
    validate_community(graph, community)?;

    let runs: Vec<RunTrace> = (0..config.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(config.seed, &[r as u64]);
            single_run(graph, community, &config, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let per_run_scores: Vec<LogProb> = runs.iter().map(|r| r.minimum).collect();
    let mut sorted: Vec<f64> = per_run_scores.iter().map(|s| s.ln()).collect();
    sorted.sort_by(f64::total_cmp);
    let log_score = LogProb::clamped(sorted[(sorted.len() - 1) / 2]);

    Ok(ScoreReport {
        neg_log10_score: log_score.neg_log10(),
        log_score,
        per_run_scores,
        runs,
        community_size: community.len(),
        tested_count: tested_count(config.test_fraction, community.len()),
    })
}

/// Outcome for one community of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartitionEntry {
    Scored(ScoreReport),
    /// Community at or below the minimum size.
    Skipped { size: usize },
}

impl PartitionEntry {
    pub fn report(&self) -> Option<&ScoreReport> {
        match self {
            PartitionEntry::Scored(r) => Some(r),
            PartitionEntry::Skipped { .. } => None,
        }
    }
}

/// Communities with at most this many nodes are not scored by default.
pub const DEFAULT_MIN_SIZE: usize = 2;

/// Scores every community of a collection. Community `i` uses the
/// sub-stream `(seed, i)`, so results do not depend on thread count.
pub fn score_partition(
    g: &SparseGraph,
    communities: &[CommunityRef],
    config: &ScoreConfig,
    min_size: usize,
) -> Result<Vec<PartitionEntry>, FocsError> {
    config.validate()?;
    communities
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            if c.len() <= min_size {
                return Ok(PartitionEntry::Skipped { size: c.len() });
            }
            let request = ScoreRequest {
                graph: g,
                community: c,
                config: ScoreConfig {
                    seed: derive_seed(config.seed, &[i as u64]),
                    ..*config
                },
            };
            focs_score(&request).map(PartitionEntry::Scored)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub scored: usize,
    pub skipped: usize,
    pub significant: usize,
}

impl PartitionSummary {
    pub fn fraction_significant(&self) -> f64 {
        if self.scored == 0 {
            0.0
        } else {
            self.significant as f64 / self.scored as f64
        }
    }
}

pub fn summarize(entries: &[PartitionEntry], alpha: f64) -> PartitionSummary {
    let mut summary = PartitionSummary {
        scored: 0,
        skipped: 0,
        significant: 0,
    };
    for e in entries {
        match e {
            PartitionEntry::Scored(r) => {
                summary.scored += 1;
                if r.is_significant(alpha) {
                    summary.significant += 1;
                }
            }
            PartitionEntry::Skipped { .. } => summary.skipped += 1,
        }
    }
    summary
}
