use focs_core::detect::{louvain_detailed, modularity};
use focs_core::fixtures::karate;
use focs_core::io::load_edge_list;
use focs_core::{score_partition, GraphMode, ScoreConfig};

#[test]
fn fixture_shape() {
    let g = karate();
    assert_eq!(g.node_count(), 34);
    assert_eq!(g.edge_count(), 78);
    assert_eq!(g.total_degree(), 156);
    assert_eq!(g.degree(0), 16);
    assert_eq!(g.degree(33), 17);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/karate.edges");
    assert_eq!(load_edge_list(path, GraphMode::Unipartite).unwrap(), g);
}

#[test]
fn louvain_quality_on_karate() {
    let g = karate();
    for seed in 0..10 {
        let r = louvain_detailed(&g, seed).unwrap();
        assert!(r.modularity >= 0.38, "seed {seed}: Q = {}", r.modularity);
        assert!((3..=5).contains(&r.partition.community_count()));
        assert!((modularity(&g, &r.partition).unwrap() - r.modularity).abs() < 1e-9);
    }
}

#[test]
fn karate_scores_are_deterministic_and_finite() {
    let g = karate();
    let partition = louvain_detailed(&g, 1).unwrap().partition;
    let communities = partition.to_community_refs(&g).unwrap();
    let config = ScoreConfig::default();
    let a = score_partition(&g, &communities, &config, 2).unwrap();
    let b = score_partition(&g, &communities, &config, 2).unwrap();
    assert_eq!(a, b);
    for entry in &a {
        let r = entry.report().unwrap();
        assert!(r.neg_log10_score.is_finite() && r.neg_log10_score >= 0.0);
        assert_eq!(r.runs.len(), 31);
    }
}
