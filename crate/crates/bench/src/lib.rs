//! Shared inputs for the criterion benchmarks.

use focs_core::generators::{lfr_like, planted_bipartite_block, LfrGraph, LfrSpec};
use focs_core::rng::substream;
use focs_core::{CommunityRef, SparseGraph};

/// Planted-partition graph with the default degree law.
pub fn lfr_fixture(n: usize, mu: f64, seed: u64) -> LfrGraph {
    lfr_like(&LfrSpec::new(n, mu, (10, 50), seed)).expect("valid benchmark spec")
}

/// Largest planted community of a planted-partition graph.
pub fn largest_community(lfr: &LfrGraph) -> CommunityRef {
    lfr.communities()
        .into_iter()
        .max_by_key(|c| c.len())
        .expect("at least one community")
}

/// 100 x 100 bipartite graph with a 15 x 15 planted block.
pub fn block_fixture(seed: u64) -> (SparseGraph, CommunityRef) {
    let mut rng = substream(seed, &[]);
    planted_bipartite_block(100, 100, 15, 15, 0.5, 0.02, &mut rng).expect("valid block spec")
}
