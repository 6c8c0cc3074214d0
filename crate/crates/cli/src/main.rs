use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynscan::affordability::QuotaPolicy;
use dynscan::dyngraph::{read_edge_list, write_edge_list, IngestedGraph, LabelMap};
use dynscan::runner::{run, RunConfig, RunOutput};
use dynscan::workload::{read_stream, write_stream};
use dynscan::{Algorithm, EngineConfig, Error, InsertStrategy, SimilarityMeasure, WorkloadConfig, WorkloadGenerator};

/// Exit status when a run finishes but reports violations.
const EXIT_VIOLATIONS: u8 = 3;

/// Largest graph the `audit` subcommand accepts without `--force`.
const AUDIT_MAX_N: usize = 2_000;

#[derive(Parser, Debug)]
#[command(name = "dynscan", version, about = "Dynamic structural graph clustering benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an edge list and write it with dense vertex ids.
    Ingest {
        graph: PathBuf,
        /// Destination of the remapped edge list.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write `dense_id label` pairs here.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Generate an update stream for a graph.
    GenStream {
        graph: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        workload: WorkloadArgs,
        #[arg(long, env = "DYNSCAN_SEED", default_value_t = 42)]
        seed: u64,
    },
    /// Replay updates, answer queries and write metrics.
    Run(RunArgs),
    /// Differential check of every algorithm against the exact oracle.
    Audit {
        graph: PathBuf,
        #[arg(long)]
        stream: Option<PathBuf>,
        /// Algorithms to check; all compatible ones by default.
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<Algorithm>,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        workload: WorkloadArgs,
        #[arg(long, env = "DYNSCAN_SEED", default_value_t = 42)]
        seed: u64,
        /// Allow graphs above the audit size limit.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args, Debug)]
struct EngineArgs {
    #[arg(long, default_value = "jaccard")]
    measure: SimilarityMeasure,
    #[arg(long, default_value_t = 0.02)]
    rho_star: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 15)]
    mu_cap: usize,
    #[arg(long, default_value = "immediate")]
    quota_policy: QuotaPolicy,
    /// Cap on samples per similarity estimate.
    #[arg(long)]
    max_samples: Option<u64>,
    /// BOTBIN signature size; derived from n and the stream length by default.
    #[arg(long)]
    botbin_k: Option<usize>,
    /// Updates between full rebuilds; 0 disables rebuilds. Default n².
    #[arg(long)]
    epoch_len: Option<u64>,
}

impl EngineArgs {
    fn config(&self, algorithm: Algorithm, seed: u64) -> EngineConfig {
        EngineConfig {
            rho_star: self.rho_star,
            delta: self.delta,
            mu_cap: self.mu_cap,
            quota_policy: self.quota_policy,
            max_samples: self.max_samples,
            botbin_k: self.botbin_k,
            seed,
            epoch_len: self.epoch_len.map(|e| (e > 0).then_some(e)),
            ..EngineConfig::new(algorithm, self.measure)
        }
    }
}

#[derive(Args, Debug)]
struct WorkloadArgs {
    #[arg(long, default_value = "dr")]
    strategy: InsertStrategy,
    /// Deletion-to-insertion ratio.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Number of updates; twice the initial edge count by default.
    #[arg(long)]
    updates: Option<u64>,
    #[arg(long, default_value_t = 20)]
    query_period: u64,
    #[arg(long, default_value_t = 0.1)]
    eps_min: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_max: f64,
    #[arg(long, default_value_t = 2)]
    mu_min: usize,
}

impl WorkloadArgs {
    fn config(&self, seed: u64) -> Result<WorkloadConfig, Error> {
        if self.eta.is_nan() || self.eta < 0.0 {
            return Err(Error::Config(format!("eta = {} must be non-negative", self.eta)));
        }
        if self.eps_min.is_nan() || self.eps_max.is_nan() || self.eps_min > self.eps_max {
            return Err(Error::Config(format!(
                "empty epsilon range [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        Ok(WorkloadConfig {
            strategy: self.strategy,
            eta: self.eta,
            updates: self.updates,
            seed,
            query_period: self.query_period,
            eps_range: (self.eps_min, self.eps_max),
            mu_min: self.mu_min,
            ..WorkloadConfig::default()
        })
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    graph: PathBuf,
    /// Replay this stream instead of generating one.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long, default_value = "vdstar")]
    algorithm: Algorithm,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    workload: WorkloadArgs,
    #[arg(long, env = "DYNSCAN_SEED", default_value_t = 42)]
    seed: u64,
    /// Metrics CSV; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Perf CSV; next to the metrics file by default.
    #[arg(long)]
    perf_output: Option<PathBuf>,
    /// Audit structures after every update and check every query against the oracle.
    #[arg(long)]
    audit: bool,
    /// Compute ARI and MLR on every k-th query.
    #[arg(long)]
    evaluate_every: Option<u64>,
    /// Record wall-clock timings (`off` writes zeros for reproducible output).
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    timings: String,
}

/// Only the affordability store carries quotas to check against.
fn tracks_recomputes(algorithm: Algorithm) -> bool {
    !matches!(algorithm, Algorithm::GsIndex | Algorithm::Botbin)
}

fn open_graph(path: &Path) -> Result<IngestedGraph, Error> {
    Ok(read_edge_list(BufReader::new(File::open(path)?))?)
}

fn load_stream(path: &Path, labels: &[String]) -> Result<Vec<dynscan::UpdateOp>, Error> {
    let mut map = LabelMap::from_labels(labels.iter().cloned());
    Ok(read_stream(BufReader::new(File::open(path)?), &mut map)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn perf_path(metrics: &Path) -> PathBuf {
    let stem = metrics.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics");
    metrics.with_file_name(format!("{stem}.perf.csv"))
}

fn summarize(out: &RunOutput) -> String {
    let p = &out.perf;
    let ari = out.quality.mean_ari().map_or_else(|| "-".into(), |a| format!("{a:.4}"));
    let mlr = out.quality.mean_mlr().map_or_else(|| "-".into(), |m| format!("{m:.4}"));
    format!(
        "{:<11} updates={} queries={} ari={ari} mlr={mlr} recomputations={} sandwich={} audit={} recompute={}",
        p.algorithm,
        p.updates,
        p.queries,
        p.recomputations,
        p.sandwich_violations,
        p.audit_failures,
        p.recompute_violations
    )
}

fn cmd_ingest(graph: &Path, output: Option<&Path>, labels: Option<&Path>) -> Result<u8, Error> {
    let g = open_graph(graph)?;
    eprintln!(
        "{}: n={} m={} dropped={} avg_degree={:.3}",
        graph.display(),
        g.graph.n(),
        g.graph.m(),
        g.dropped,
        g.graph.average_degree()
    );
    if let Some(path) = output {
        let mut w = create(path)?;
        write_edge_list(&g.graph, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = labels {
        let mut w = create(path)?;
        for (i, l) in g.labels.iter().enumerate() {
            writeln!(w, "{i} {l}")?;
        }
        w.flush()?;
    }
    Ok(0)
}

fn cmd_gen_stream(graph: &Path, output: &Path, workload: &WorkloadArgs, seed: u64) -> Result<u8, Error> {
    let g = open_graph(graph)?;
    let cfg = workload.config(seed)?;
    let count = cfg.stream_len(&g.graph);
    let ops = WorkloadGenerator::new(cfg).stream(&g.graph, count)?;
    let labels = LabelMap::from_labels(g.labels);
    let mut w = create(output)?;
    write_stream(&ops, Some(&labels), &mut w)?;
    w.flush()?;
    eprintln!("wrote {} updates to {}", ops.len(), output.display());
    Ok(0)
}

fn cmd_run(args: &RunArgs) -> Result<u8, Error> {
    let g = open_graph(&args.graph)?;
    let stream = args.stream.as_deref().map(|p| load_stream(p, &g.labels)).transpose()?;
    let mut engine = args.engine.config(args.algorithm, args.seed);
    engine.track_recomputes = args.audit && tracks_recomputes(args.algorithm);
    let config = RunConfig {
        engine,
        workload: args.workload.config(args.seed)?,
        evaluate_every: if args.audit { Some(1) } else { args.evaluate_every },
        sandwich: args.audit,
        audit_structures: args.audit,
        timings: args.timings == "on",
    };
    let out = run(g.graph, stream.as_deref(), &config)?;

    match &args.output {
        Some(path) => {
            let mut w = create(path)?;
            out.quality.write_csv(&mut w)?;
            w.flush()?;
        }
        None => out.quality.write_csv(io::stdout().lock())?,
    }
    let perf = args.perf_output.clone().or_else(|| args.output.as_deref().map(perf_path));
    match perf {
        Some(path) => {
            let mut w = create(&path)?;
            out.perf.write_csv(&mut w)?;
            w.flush()?;
        }
        None => out.perf.write_csv(io::stderr().lock())?,
    }
    eprintln!("{}", summarize(&out));
    for msg in &out.audit_messages {
        eprintln!("  {msg}");
    }
    Ok(if out.violations() > 0 { EXIT_VIOLATIONS } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_audit(
    graph: &Path,
    stream: Option<&Path>,
    algorithms: &[Algorithm],
    engine: &EngineArgs,
    workload: &WorkloadArgs,
    seed: u64,
    force: bool,
) -> Result<u8, Error> {
    let g = open_graph(graph)?;
    if g.graph.n() > AUDIT_MAX_N && !force {
        return Err(Error::Config(format!(
            "audit runs the oracle on every query; n = {} exceeds {AUDIT_MAX_N} (pass --force)",
            g.graph.n()
        )));
    }
    let stream = stream.map(|p| load_stream(p, &g.labels)).transpose()?;
    let selected: Vec<Algorithm> = if algorithms.is_empty() {
        Algorithm::ALL
            .into_iter()
            .filter(|&a| a != Algorithm::Botbin || engine.measure == SimilarityMeasure::Jaccard)
            .collect()
    } else {
        algorithms.to_vec()
    };
    let mut violations = 0;
    for algorithm in selected {
        let mut cfg = engine.config(algorithm, seed);
        cfg.track_recomputes = tracks_recomputes(algorithm);
        let config = RunConfig {
            engine: cfg,
            workload: workload.config(seed)?,
            evaluate_every: Some(1),
            sandwich: true,
            audit_structures: true,
            timings: false,
        };
        let out = run(g.graph.clone(), stream.as_deref(), &config)?;
        let status = if out.violations() == 0 { "ok" } else { "FAIL" };
        println!("{status:<4} {}", summarize(&out));
        for msg in &out.audit_messages {
            println!("     {msg}");
        }
        violations += out.violations();
    }
    Ok(if violations > 0 { EXIT_VIOLATIONS } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest { graph, output, labels } => cmd_ingest(graph, output.as_deref(), labels.as_deref()),
        Command::GenStream {
            graph,
            output,
            workload,
            seed,
        } => cmd_gen_stream(graph, output, workload, *seed),
        Command::Run(args) => cmd_run(args),
        Command::Audit {
            graph,
            stream,
            algorithms,
            engine,
            workload,
            seed,
            force,
        } => cmd_audit(graph, stream.as_deref(), algorithms, engine, workload, *seed, *force),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
