//! Command implementations for the `focs` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use focs_core::detect::{anneal_extract, bipartite_quality, default_max_iterations, louvain_detailed};
use focs_core::focs::{summarize, DEFAULT_MIN_SIZE};
use focs_core::generators::{
    configuration_model, lfr_like, planted_bipartite_block, sample_degrees, DegreeSequenceSpec,
    LfrSpec,
};
use focs_core::io::{load_communities, load_edge_list, write_communities, write_edge_list};
use focs_core::rng::{derive_seed, substream};
use focs_core::{
    focs_score, CommunityRef, GraphMode, PartitionEntry, ScoreConfig, ScoreRequest, SparseGraph,
};

/// Invalid flags or parameter combinations. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// 2 for configuration errors, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        2
    } else {
        1
    }
}

#[derive(Debug, Parser)]
#[command(name = "focs", version, about = "Significance of optimized network communities")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FOCS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every community of a community file.
    Score(ScoreArgs),
    /// Louvain partition of a unipartite graph.
    Detect(DetectArgs),
    /// Grow bipartite communities from seed communities.
    Extract(ExtractArgs),
    /// Write a benchmark graph (and its planted communities).
    Generate(GenerateArgs),
    /// Score calibration on configuration-model graphs.
    NullBench(NullBenchArgs),
    /// Mean score against the mixing parameter on planted-partition graphs.
    PowerBench(PowerBenchArgs),
}

/// Scoring parameters shared by the scoring and benchmark commands.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Fraction of members tested.
    #[arg(long = "p", default_value_t = 0.25)]
    pub test_fraction: f64,
    /// Resampling runs per community.
    #[arg(long, default_value_t = 31)]
    pub resamples: usize,
    /// Significance threshold.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            test_fraction: 0.25,
            resamples: 31,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction <= 1.0) {
            return Err(config_error(format!("--p {} outside (0, 1]", self.test_fraction)));
        }
        if self.resamples == 0 {
            return Err(config_error("--resamples must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_error(format!("--alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    pub fn score_config(&self) -> ScoreConfig {
        ScoreConfig {
            test_fraction: self.test_fraction,
            resamples: self.resamples,
            seed: self.seed,
            ..ScoreConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub communities: PathBuf,
    /// Read the graph as bipartite.
    #[arg(long)]
    pub bipartite: bool,
    #[command(flatten)]
    pub run: RunConfig,
    /// Communities with at most this many nodes are skipped.
    #[arg(long, default_value_t = DEFAULT_MIN_SIZE)]
    pub min_size: usize,
    /// CSV destination (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// Bipartite edge list.
    #[arg(long)]
    pub graph: PathBuf,
    /// Seed communities, one per line.
    #[arg(long)]
    pub communities: PathBuf,
    /// Accepted for symmetry with `score`; the graph is always bipartite.
    #[arg(long)]
    pub bipartite: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Move budget per seed (default: ten per node).
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    /// Configuration model with power-law degrees.
    Config,
    /// Planted partition with mixing parameter.
    Lfr,
    /// Bipartite graph with one planted block.
    Block,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = GraphKind::Lfr)]
    pub kind: GraphKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub mu: f64,
    #[command(flatten)]
    pub degrees: DegreeArgs,
    #[arg(long, default_value_t = 10)]
    pub c_min: usize,
    #[arg(long, default_value_t = 50)]
    pub c_max: usize,
    #[arg(long, default_value_t = 100)]
    pub nu: usize,
    #[arg(long, default_value_t = 100)]
    pub nv: usize,
    #[arg(long, default_value_t = 15)]
    pub block_u: usize,
    #[arg(long, default_value_t = 15)]
    pub block_v: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    pub p_out: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.edges` and, when communities are
    /// planted, `<out>.communities`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct DegreeArgs {
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub exponent: f64,
    #[arg(long, default_value_t = 10)]
    pub d_min: u64,
    #[arg(long, default_value_t = 50)]
    pub d_max: u64,
}

impl Default for DegreeArgs {
    fn default() -> Self {
        DegreeArgs {
            exponent: -2.0,
            d_min: 10,
            d_max: 50,
        }
    }
}

impl DegreeArgs {
    fn spec(&self, n: usize) -> DegreeSequenceSpec {
        DegreeSequenceSpec::new(n, self.exponent, self.d_min, self.d_max)
    }
}

#[derive(Debug, Clone, Args)]
pub struct NullBenchArgs {
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[command(flatten)]
    pub degrees: DegreeArgs,
    #[command(flatten)]
    pub run: RunConfig,
    /// Sorted scores with plotting quantiles (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-repetition records.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PowerBenchArgs {
    /// Networks generated per mixing value.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub c_min: usize,
    #[arg(long, default_value_t = 50)]
    pub c_max: usize,
    /// Comma-separated mixing values.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub mu_grid: String,
    #[command(flatten)]
    pub degrees: DegreeArgs,
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
}

/// One scored community of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub experiment: String,
    pub n: usize,
    pub mu: Option<f64>,
    pub degree_exponent: f64,
    pub d_min: u64,
    pub d_max: u64,
    pub seed: u64,
    pub network: usize,
    pub community_size: usize,
    pub neg_log10_score: f64,
    pub wall_ms: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = match cli.threads {
        Some(0) => return Err(config_error("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?,
        None => rayon::ThreadPoolBuilder::new().build()?,
    };
    pool.install(|| match cli.command {
        Command::Score(a) => cmd_score(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::NullBench(a) => cmd_null_benchmark(&a),
        Command::PowerBench(a) => cmd_power_benchmark(&a),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_graph(path: &Path, bipartite: bool) -> Result<SparseGraph> {
    let mode = if bipartite {
        GraphMode::Bipartite
    } else {
        GraphMode::Unipartite
    };
    load_edge_list(path, mode).with_context(|| format!("reading graph {}", path.display()))
}

/// Scores communities like `score_partition`, also timing each one.
pub fn score_timed(
    g: &SparseGraph,
    communities: &[CommunityRef],
    config: &ScoreConfig,
    min_size: usize,
) -> Result<Vec<(PartitionEntry, f64)>> {
    config.validate().map_err(|e| config_error(e.to_string()))?;
    communities
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            if c.len() <= min_size {
                return Ok((PartitionEntry::Skipped { size: c.len() }, 0.0));
            }
            let start = Instant::now();
            let report = focs_score(&ScoreRequest {
                graph: g,
                community: c,
                config: ScoreConfig {
                    seed: derive_seed(config.seed, &[i as u64]),
                    ..*config
                },
            })
            .with_context(|| format!("scoring community {i}"))?;
            Ok((PartitionEntry::Scored(report), start.elapsed().as_secs_f64() * 1e3))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    community_index: usize,
    size: usize,
    status: &'static str,
    tested_count: usize,
    neg_log10_score: Option<f64>,
    significant_at_alpha: bool,
}

fn write_score_csv<W: Write>(entries: &[PartitionEntry], alpha: f64, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "community_index",
        "size",
        "status",
        "tested_count",
        "neg_log10_score",
        "significant_at_alpha",
    ])?;
    for (i, e) in entries.iter().enumerate() {
        let row = match e {
            PartitionEntry::Scored(r) => ScoreRow {
                community_index: i,
                size: r.community_size,
                status: "scored",
                tested_count: r.tested_count,
                neg_log10_score: Some(r.neg_log10_score),
                significant_at_alpha: r.is_significant(alpha),
            },
            PartitionEntry::Skipped { size } => ScoreRow {
                community_index: i,
                size: *size,
                status: "skipped",
                tested_count: 0,
                neg_log10_score: None,
                significant_at_alpha: false,
            },
        };
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Scores a community file and writes one CSV row per community.
pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    args.run.validate()?;
    let g = load_graph(&args.graph, args.bipartite)?;
    let communities = load_communities(&args.communities, &g)
        .with_context(|| format!("reading communities {}", args.communities.display()))?;
    let entries: Vec<PartitionEntry> = score_timed(&g, &communities, &args.run.score_config(), args.min_size)?
        .into_iter()
        .map(|(e, _)| e)
        .collect();
    write_score_csv(&entries, args.run.alpha, output(args.out.as_deref())?)?;
    let summary = summarize(&entries, args.run.alpha);
    eprintln!(
        "{} of {} scored communities significant at alpha = {} (fraction {:.3}); {} skipped",
        summary.significant,
        summary.scored,
        args.run.alpha,
        summary.fraction_significant(),
        summary.skipped
    );
    Ok(())
}

pub fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let g = load_graph(&args.graph, false)?;
    let result = louvain_detailed(&g, args.seed).map_err(|e| config_error(e.to_string()))?;
    let communities = result.partition.to_community_refs(&g)?;
    let mut out = output(args.out.as_deref())?;
    write_communities(&g, &communities, &mut out)?;
    out.flush()?;
    eprintln!(
        "{} communities, modularity {:.4}",
        result.partition.community_count(),
        result.modularity
    );
    Ok(())
}

/// Extracted community and its final quality.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub community: CommunityRef,
    pub quality: f64,
}

/// Runs the extractor from every seed; seed `i` uses sub-stream `(seed, i)`.
pub fn extract_all(
    g: &SparseGraph,
    seeds: &[CommunityRef],
    seed: u64,
    max_iterations: Option<usize>,
) -> Result<Vec<Extraction>> {
    let budget = max_iterations.unwrap_or_else(|| default_max_iterations(g));
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = substream(seed, &[i as u64]);
            let community =
                anneal_extract(g, s, budget, &mut rng).with_context(|| format!("seed community {i}"))?;
            let quality = bipartite_quality(g, &community)?;
            Ok(Extraction { community, quality })
        })
        .collect()
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let g = load_graph(&args.graph, true)?;
    let seeds = load_communities(&args.communities, &g)
        .with_context(|| format!("reading communities {}", args.communities.display()))?;
    let found = extract_all(&g, &seeds, args.seed, args.max_iterations)?;
    let mut out = output(args.out.as_deref())?;
    for (i, e) in found.iter().enumerate() {
        writeln!(out, "# community {i} size {} quality {}", e.community.len(), e.quality)?;
        write_communities(&g, std::slice::from_ref(&e.community), &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let mut rng = substream(args.seed, &[]);
    let (g, communities) = match args.kind {
        GraphKind::Config => {
            let degrees =
                sample_degrees(&args.degrees.spec(args.n), &mut rng).map_err(|e| config_error(e.to_string()))?;
            (configuration_model(&degrees, &mut rng)?, None)
        }
        GraphKind::Lfr => {
            let spec = LfrSpec {
                degree_spec: args.degrees.spec(args.n),
                ..LfrSpec::new(args.n, args.mu, (args.c_min, args.c_max), args.seed)
            };
            let out = lfr_like(&spec).map_err(|e| config_error(e.to_string()))?;
            let cs = out.communities();
            (out.graph, Some(cs))
        }
        GraphKind::Block => {
            let (g, c) = planted_bipartite_block(
                args.nu,
                args.nv,
                args.block_u,
                args.block_v,
                args.p_in,
                args.p_out,
                &mut rng,
            )
            .map_err(|e| config_error(e.to_string()))?;
            (g, Some(vec![c]))
        }
    };
    write_file(&with_extension(&args.out, "edges"), |w| write_edge_list(&g, w))?;
    if let Some(cs) = communities {
        write_file(&with_extension(&args.out, "communities"), |w| write_communities(&g, &cs, w))?;
    }
    eprintln!("{} nodes, {} edges", g.node_count(), g.edge_count());
    Ok(())
}

/// Calibration experiment settings.
#[derive(Debug, Clone)]
pub struct NullBenchConfig {
    pub reps: usize,
    pub degrees: DegreeSequenceSpec,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileRow {
    pub rank: usize,
    pub neg_log10_score: f64,
    pub score: f64,
    pub uniform_quantile: f64,
}

#[derive(Debug, Clone)]
pub struct NullBenchOutput {
    /// One record per repetition, in repetition order.
    pub records: Vec<BenchmarkRecord>,
    /// Scores sorted ascending with plotting positions `i / (reps + 1)`.
    pub rows: Vec<QuantileRow>,
}

impl NullBenchOutput {
    /// Fraction of repetitions with score strictly below `alpha`.
    pub fn fraction_below(&self, alpha: f64) -> f64 {
        let cut = -alpha.log10();
        let hits = self.records.iter().filter(|r| r.neg_log10_score > cut).count();
        hits as f64 / self.records.len().max(1) as f64
    }
}

const NULL_ATTEMPTS: u64 = 20;

/// Configuration-model graph, Louvain partition, one community of size
/// above two picked uniformly, scored. Repetition `r` draws from
/// sub-streams `(seed, r, ...)`.
pub fn null_benchmark(config: &NullBenchConfig) -> Result<NullBenchOutput> {
    config.run.validate()?;
    if config.reps == 0 {
        return Err(config_error("--reps must be at least 1"));
    }
    config.degrees.validate().map_err(|e| config_error(e.to_string()))?;
    let seed = config.run.seed;
    let score_base = config.run.score_config();
    let records: Vec<BenchmarkRecord> = (0..config.reps)
        .into_par_iter()
        .map(|rep| -> Result<BenchmarkRecord> {
            let r = rep as u64;
            for attempt in 0..NULL_ATTEMPTS {
                let mut rng = substream(seed, &[r, 0, attempt]);
                let degrees = sample_degrees(&config.degrees, &mut rng)?;
                let g = configuration_model(&degrees, &mut rng)?;
                let partition = louvain_detailed(&g, derive_seed(seed, &[r, 1, attempt]))?.partition;
                let candidates: Vec<Vec<usize>> =
                    partition.communities().into_iter().filter(|c| c.len() > 2).collect();
                if candidates.is_empty() {
                    continue;
                }
                let mut pick_rng = substream(seed, &[r, 2, attempt]);
                let chosen = CommunityRef::Unipartite(
                    candidates[rand::Rng::gen_range(&mut pick_rng, 0..candidates.len())].clone(),
                );
                let start = Instant::now();
                let report = focs_score(&ScoreRequest {
                    graph: &g,
                    community: &chosen,
                    config: ScoreConfig {
                        seed: derive_seed(seed, &[r, 3, attempt]),
                        ..score_base
                    },
                })?;
                return Ok(BenchmarkRecord {
                    experiment: "null".into(),
                    n: config.degrees.n,
                    mu: None,
                    degree_exponent: config.degrees.exponent,
                    d_min: config.degrees.d_min,
                    d_max: config.degrees.d_max,
                    seed,
                    network: rep,
                    community_size: chosen.len(),
                    neg_log10_score: report.neg_log10_score,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                });
            }
            anyhow::bail!("repetition {rep}: no community with more than two nodes after {NULL_ATTEMPTS} graphs")
        })
        .collect::<Result<_>>()?;

    let mut scores: Vec<f64> = records.iter().map(|r| r.neg_log10_score).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let reps = scores.len();
    let rows = scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| QuantileRow {
            rank: i + 1,
            neg_log10_score: s,
            score: 10f64.powf(-s),
            uniform_quantile: (i + 1) as f64 / (reps + 1) as f64,
        })
        .collect();
    Ok(NullBenchOutput { records, rows })
}

fn write_csv<T: Serialize, W: Write>(rows: &[T], headers: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(headers)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const RECORD_HEADERS: [&str; 11] = [
    "experiment",
    "n",
    "mu",
    "degree_exponent",
    "d_min",
    "d_max",
    "seed",
    "network",
    "community_size",
    "neg_log10_score",
    "wall_ms",
];

pub fn cmd_null_benchmark(args: &NullBenchArgs) -> Result<()> {
    let out = null_benchmark(&NullBenchConfig {
        reps: args.reps,
        degrees: args.degrees.spec(args.n),
        run: args.run.clone(),
    })?;
    write_csv(
        &out.rows,
        &["rank", "neg_log10_score", "score", "uniform_quantile"],
        output(args.out.as_deref())?,
    )?;
    if let Some(path) = &args.records {
        write_csv(&out.records, &RECORD_HEADERS, output(Some(path))?)?;
    }
    eprintln!(
        "fraction of scores below {}: {:.4} over {} repetitions",
        args.run.alpha,
        out.fraction_below(args.run.alpha),
        out.records.len()
    );
    Ok(())
}

/// Parses a comma-separated list of mixing values in `[0, 1]`.
pub fn parse_mu_grid(text: &str) -> Result<Vec<f64>> {
    let grid = text
        .split(',')
        .map(|t| {
            let mu: f64 = t
                .trim()
                .parse()
                .map_err(|_| config_error(format!("--mu-grid: bad value {t:?}")))?;
            if !(0.0..=1.0).contains(&mu) {
                return Err(config_error(format!("--mu-grid: {mu} outside [0, 1]")));
            }
            Ok(mu)
        })
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(config_error("--mu-grid is empty"));
    }
    Ok(grid)
}

/// Power experiment settings.
#[derive(Debug, Clone)]
pub struct PowerBenchConfig {
    pub n: usize,
    pub community_sizes: (usize, usize),
    pub mu_grid: Vec<f64>,
    pub networks: usize,
    pub degrees: DegreeArgs,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub mu: f64,
    pub networks: usize,
    pub communities: usize,
    pub mean_neg_log10_score: f64,
    pub fraction_significant: f64,
}

#[derive(Debug, Clone)]
pub struct PowerBenchOutput {
    pub records: Vec<BenchmarkRecord>,
    pub rows: Vec<PowerRow>,
}

/// For each mixing value, generates `networks` planted-partition graphs and
/// scores every planted community. Network `j` at grid index `i` uses
/// sub-streams `(seed, i, j, ...)`.
pub fn power_benchmark(config: &PowerBenchConfig) -> Result<PowerBenchOutput> {
    config.run.validate()?;
    if config.networks == 0 {
        return Err(config_error("--reps must be at least 1"));
    }
    if config.mu_grid.is_empty() {
        return Err(config_error("--mu-grid is empty"));
    }
    let seed = config.run.seed;
    let jobs: Vec<(usize, usize)> = (0..config.mu_grid.len())
        .flat_map(|i| (0..config.networks).map(move |j| (i, j)))
        .collect();
    let per_network: Vec<Vec<BenchmarkRecord>> = jobs
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<BenchmarkRecord>> {
            let mu = config.mu_grid[i];
            let net_seed = derive_seed(seed, &[i as u64, j as u64, 0]);
            let spec = LfrSpec {
                degree_spec: config.degrees.spec(config.n),
                ..LfrSpec::new(config.n, mu, config.community_sizes, net_seed)
            };
            let lfr = lfr_like(&spec).map_err(|e| config_error(e.to_string()))?;
            let score = ScoreConfig {
                seed: derive_seed(seed, &[i as u64, j as u64, 1]),
                ..config.run.score_config()
            };
            let scored = score_timed(&lfr.graph, &lfr.communities(), &score, DEFAULT_MIN_SIZE)
                .with_context(|| format!("mu = {mu}, network {j}"))?;
            Ok(scored
                .into_iter()
                .filter_map(|(entry, ms)| {
                    entry.report().map(|r| BenchmarkRecord {
                        experiment: "power".into(),
                        n: config.n,
                        mu: Some(mu),
                        degree_exponent: config.degrees.exponent,
                        d_min: config.degrees.d_min,
                        d_max: config.degrees.d_max,
                        seed: net_seed,
                        network: j,
                        community_size: r.community_size,
                        neg_log10_score: r.neg_log10_score,
                        wall_ms: ms,
                    })
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let cut = -config.run.alpha.log10();
    let rows = config
        .mu_grid
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let scores: Vec<f64> = per_network[i * config.networks..(i + 1) * config.networks]
                .iter()
                .flatten()
                .map(|r| r.neg_log10_score)
                .collect();
            let count = scores.len().max(1) as f64;
            PowerRow {
                mu,
                networks: config.networks,
                communities: scores.len(),
                mean_neg_log10_score: scores.iter().sum::<f64>() / count,
                fraction_significant: scores.iter().filter(|&&s| s > cut).count() as f64 / count,
            }
        })
        .collect();
    Ok(PowerBenchOutput {
        records: per_network.into_iter().flatten().collect(),
        rows,
    })
}

pub fn cmd_power_benchmark(args: &PowerBenchArgs) -> Result<()> {
    let out = power_benchmark(&PowerBenchConfig {
        n: args.n,
        community_sizes: (args.c_min, args.c_max),
        mu_grid: parse_mu_grid(&args.mu_grid)?,
        networks: args.reps,
        degrees: args.degrees,
        run: args.run.clone(),
    })?;
    write_csv(
        &out.rows,
        &["mu", "networks", "communities", "mean_neg_log10_score", "fraction_significant"],
        output(args.out.as_deref())?,
    )?;
    if let Some(path) = &args.records {
        write_csv(&out.records, &RECORD_HEADERS, output(Some(path))?)?;
    }
    Ok(())
}
