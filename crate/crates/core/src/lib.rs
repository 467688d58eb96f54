//! Community significance scoring on sparse multigraphs.
//!
//! The crate bundles graph storage and I/O, hypergeometric tail
//! probabilities in log space, the significance scorer itself, benchmark
//! graph generators and two community finders (Louvain for unipartite
//! graphs and an annealing extractor for bipartite graphs).

pub mod community;
pub mod detect;
pub mod fixtures;
pub mod focs;
pub mod generators;
pub mod graph;
pub mod io;
pub mod rng;
pub mod stats;

pub use community::{CommunityRef, Partition};
pub use focs::{
    focs_score, focs_single_run, node_gscore, null_params_bipartite, null_params_unipartite,
    score_partition, DrawMode, FocsError, PartitionEntry, RunTrace, ScoreConfig, ScoreReport,
    ScoreRequest,
};
pub use graph::{GraphBuilder, GraphError, GraphMode, Side, SparseGraph};
pub use io::FormatError;
pub use rng::StreamRng;
pub use stats::{HypergeomParams, LogProb, StatsError};
