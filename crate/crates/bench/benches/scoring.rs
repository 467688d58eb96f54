use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use focs_bench::{block_fixture, largest_community, lfr_fixture};
use focs_core::detect::{anneal_extract, default_max_iterations, louvain};
use focs_core::rng::substream;
use focs_core::stats::{hypergeom_cdf_step, hypergeom_logcdf};
use focs_core::{focs_score, HypergeomParams, ScoreConfig, ScoreRequest};

fn hypergeometric(c: &mut Criterion) {
    let mut group = c.benchmark_group("hypergeom");
    for &(k, m, n) in &[(40u64, 400u64, 20u64), (5_000, 60_000, 50), (50_000, 500_000, 400)] {
        let params = HypergeomParams::new(k, m, n).unwrap();
        let x = n / 2;
        group.bench_with_input(BenchmarkId::new("logcdf", format!("{k}-{m}-{n}")), &params, |b, p| {
            b.iter(|| hypergeom_logcdf(black_box(x), p))
        });
        group.bench_with_input(BenchmarkId::new("cdf_step", format!("{k}-{m}-{n}")), &params, |b, p| {
            b.iter(|| hypergeom_cdf_step(black_box(x), p).unwrap())
        });
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let mut group = c.benchmark_group("focs_score");
    group.sample_size(20);
    for &n in &[1_000usize, 5_000] {
        let lfr = lfr_fixture(n, 0.3, 1);
        let community = largest_community(&lfr);
        group.bench_function(BenchmarkId::new("lfr", n), |b| {
            b.iter(|| {
                focs_score(&ScoreRequest {
                    graph: &lfr.graph,
                    community: &community,
                    config: ScoreConfig::default(),
                })
                .unwrap()
            })
        });
    }
    let (g, block) = block_fixture(2);
    group.bench_function("bipartite_block", |b| {
        b.iter(|| {
            focs_score(&ScoreRequest {
                graph: &g,
                community: &block,
                config: ScoreConfig::default(),
            })
            .unwrap()
        })
    });
    group.finish();
}

fn detection(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect");
    group.sample_size(10);
    let lfr = lfr_fixture(2_000, 0.3, 3);
    group.bench_function("louvain_2000", |b| b.iter(|| louvain(&lfr.graph, 0).unwrap()));
    let (g, block) = block_fixture(4);
    let budget = default_max_iterations(&g);
    group.bench_function("anneal_block", |b| {
        b.iter(|| anneal_extract(&g, &block, budget, &mut substream(5, &[])).unwrap())
    });
    group.finish();
}

criterion_group!(benches, hypergeometric, scoring, detection);
criterion_main!(benches);
