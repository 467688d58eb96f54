use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const KARATE: &str = include_str!("../../core/fixtures/karate.edges");

fn focs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_focs"))
        .args(args)
        .env("FOCS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn detect_then_score_karate() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "karate.edges", KARATE);
    let parts = dir.path().join("karate.communities");
    let out = focs(&["detect", "--graph", s(&graph), "--seed", "3", "--out", s(&parts)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = fs::read_to_string(&parts).unwrap();
    let count = lines.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).count();
    assert!((3..=5).contains(&count));

    let csv_path = dir.path().join("scores.csv");
    let out = focs(&[
        "score",
        "--graph",
        s(&graph),
        "--communities",
        s(&parts),
        "--out",
        s(&csv_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "community_index",
            "size",
            "status",
            "tested_count",
            "neg_log10_score",
            "significant_at_alpha"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), count);
    for row in &rows {
        let score: f64 = row[4].parse().unwrap();
        assert!(score >= 0.0);
    }
}

#[test]
fn score_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "karate.edges", KARATE);
    let comms = write(dir.path(), "c.txt", "1 2 3 4 8 12 13 14 18 20 22\n5 6 7 11 17\n");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_focs"))
            .args(["--threads", threads, "score", "--graph", s(&graph), "--communities", s(&comms)])
            .args(["--seed", "17"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
}

#[test]
fn empty_community_file_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "karate.edges", KARATE);
    let comms = write(dir.path(), "empty.txt", "# nothing here\n");
    let out = focs(&["score", "--graph", s(&graph), "--communities", s(&comms)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("community_index,"));
}

#[test]
fn small_communities_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "karate.edges", KARATE);
    let comms = write(dir.path(), "c.txt", "1 2\n1 2 3 4 8 14\n");
    let out = focs(&["score", "--graph", s(&graph), "--communities", s(&comms)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("0,2,skipped,0,,false"), "{}", rows[0]);
    assert!(rows[1].starts_with("1,6,scored,2,"), "{}", rows[1]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "karate.edges", KARATE);
    let comms = write(dir.path(), "c.txt", "1 2 3 4\n");
    for bad in [["--p", "0"], ["--p", "1.5"], ["--resamples", "0"]] {
        let mut args = vec!["score", "--graph", s(&graph), "--communities", s(&comms)];
        args.extend(bad);
        let out = focs(&args);
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
    }
    let out = focs(&["--threads", "0", "null-bench", "--reps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = focs(&["power-bench", "--mu-grid", "0.1,abc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "karate.edges", KARATE);
    let comms = write(dir.path(), "c.txt", "1 2 unknown\n");
    let out = focs(&["score", "--graph", s(&graph), "--communities", s(&comms)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = focs(&["score", "--graph", "/nonexistent/g.edges", "--communities", s(&comms)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn null_bench_writes_quantile_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("null.csv");
    let records = dir.path().join("records.csv");
    let out = focs(&[
        "null-bench",
        "--reps",
        "12",
        "--out",
        s(&table),
        "--records",
        s(&records),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&table).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["rank", "neg_log10_score", "score", "uniform_quantile"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    let scores: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
    let quantiles: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(quantiles.windows(2).all(|w| w[0] < w[1]));
    assert!(quantiles.iter().all(|&q| q > 0.0 && q < 1.0));
    let n_records = csv::Reader::from_path(&records).unwrap().records().count();
    assert_eq!(n_records, 12);
}

#[test]
fn generate_and_extract_block() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("block");
    let out = focs(&[
        "generate", "--kind", "block", "--nu", "40", "--nv", "40", "--block-u", "8", "--block-v", "8",
        "--p-in", "0.9", "--p-out", "0.02", "--seed", "5", "--out", s(&prefix),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let graph = dir.path().join("block.edges");
    let planted = dir.path().join("block.communities");
    assert!(graph.exists() && planted.exists());
    let found = dir.path().join("found.txt");
    let out = focs(&[
        "extract",
        "--graph",
        s(&graph),
        "--communities",
        s(&planted),
        "--out",
        s(&found),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&found).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# community 0 size "));
    let out = focs(&["score", "--bipartite", "--graph", s(&graph), "--communities", s(&found)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
