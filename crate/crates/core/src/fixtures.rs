//! Bundled example networks.

use crate::graph::{GraphMode, SparseGraph};
use crate::io::parse_edge_list;

const KARATE: &str = include_str!("../fixtures/karate.edges");

/// Zachary's karate club: 34 nodes, 78 edges.
pub fn karate() -> SparseGraph {
    parse_edge_list(KARATE.as_bytes(), GraphMode::Unipartite).expect("bundled fixture parses")
}
