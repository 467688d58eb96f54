use focs_core::focs::tested_count;
use focs_core::{focs_score, CommunityRef, GraphBuilder, LogProb, ScoreConfig, ScoreRequest, SparseGraph};
use proptest::prelude::*;

fn arb_case() -> impl Strategy<Value = (SparseGraph, CommunityRef, u64, f64)> {
    (3usize..14)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0..n, 0..n, 1u64..3), 0..40),
                prop::collection::vec(any::<bool>(), n),
                any::<u64>(),
                0.05f64..=1.0,
            )
        })
        .prop_filter_map("community needs two members", |(n, edges, mask, seed, p)| {
            let mut b = GraphBuilder::unipartite(n);
            for (u, v, m) in edges {
                b.add_edge(u, v, m).unwrap();
            }
            let members: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            (members.len() >= 2).then(|| (b.build(), CommunityRef::Unipartite(members), seed, p))
        })
}

fn arb_bipartite_case() -> impl Strategy<Value = (SparseGraph, CommunityRef, u64, f64)> {
    (2usize..7, 2usize..7)
        .prop_flat_map(|(nu, nv)| {
            (
                Just((nu, nv)),
                prop::collection::vec((0..nu, 0..nv, 1u64..3), 0..30),
                prop::collection::vec(any::<bool>(), nu + nv),
                any::<u64>(),
                0.05f64..=1.0,
            )
        })
        .prop_filter_map("both sides nonempty", |((nu, nv), edges, mask, seed, p)| {
            let mut b = GraphBuilder::bipartite(nu, nv);
            for (u, v, m) in edges {
                b.add_edge(u, nu + v, m).unwrap();
            }
            let u_side: Vec<usize> = (0..nu).filter(|&i| mask[i]).collect();
            let v_side: Vec<usize> = (nu..nu + nv).filter(|&i| mask[i]).collect();
            (!u_side.is_empty() && !v_side.is_empty())
                .then(|| (b.build(), CommunityRef::Bipartite { u_side, v_side }, seed, p))
        })
}

fn check_invariants(g: &SparseGraph, c: &CommunityRef, seed: u64, p: f64) -> Result<(), TestCaseError> {
    let config = ScoreConfig {
        test_fraction: p,
        resamples: 5,
        seed,
        ..ScoreConfig::default()
    };
    let request = ScoreRequest {
        graph: g,
        community: c,
        config,
    };
    let report = focs_score(&request).unwrap();
    prop_assert_eq!(&report, &focs_score(&request).unwrap());
    let k = tested_count(p, c.len());
    prop_assert_eq!(report.tested_count, k);
    for run in &report.runs {
        if run.stop.is_none() {
            prop_assert_eq!(run.iterations.len(), k);
        } else {
            prop_assert!(run.iterations.len() <= k);
        }
        let mut running = LogProb::ONE;
        for (i, it) in run.iterations.iter().enumerate() {
            prop_assert!(it.log_f >= it.log_g);
            running = running.min(it.log_f);
            let expected_m = (g.node_count() - c.len() + i + 1) as u64;
            prop_assert_eq!(it.order_count, expected_m);
        }
        prop_assert_eq!(run.minimum, running);
    }
    let minima: Vec<LogProb> = report.runs.iter().map(|r| r.minimum).collect();
    prop_assert_eq!(&report.per_run_scores, &minima);
    prop_assert!(minima.contains(&report.log_score));
    prop_assert!(report.neg_log10_score >= 0.0);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn unipartite_loop_invariants((g, c, seed, p) in arb_case()) {
        check_invariants(&g, &c, seed, p)?;
    }

    #[test]
    fn bipartite_loop_invariants((g, c, seed, p) in arb_bipartite_case()) {
        check_invariants(&g, &c, seed, p)?;
    }

    #[test]
    fn incremental_equals_recompute((g, c, seed, p) in arb_case()) {
        let base = ScoreConfig { test_fraction: p, resamples: 3, seed, ..ScoreConfig::default() };
        let fast = focs_score(&ScoreRequest { graph: &g, community: &c, config: base }).unwrap();
        let slow = focs_score(&ScoreRequest {
            graph: &g,
            community: &c,
            config: ScoreConfig { recompute: true, ..base },
        }).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn incremental_equals_recompute_bipartite((g, c, seed, p) in arb_bipartite_case()) {
        let base = ScoreConfig { test_fraction: p, resamples: 3, seed, ..ScoreConfig::default() };
        let fast = focs_score(&ScoreRequest { graph: &g, community: &c, config: base }).unwrap();
        let slow = focs_score(&ScoreRequest {
            graph: &g,
            community: &c,
            config: ScoreConfig { recompute: true, ..base },
        }).unwrap();
        prop_assert_eq!(fast, slow);
    }
}
