use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tracing::info;

use pqready_core::exposure::{readiness_delta, ReadinessDelta};
use pqready_core::ingest::ingest_paths;
use pqready_core::snapshot::{parse_snapshot, serialize_snapshot};
use pqready_core::synth::{
    experiment_correlation, experiment_random_bumps, generate, generate_disjoint_paths, generate_graph, mc_compromise,
    readiness_sweep, DisjointSpec, GenSpec, ParameterKind,
};
use pqready_core::{score, AssetGraph, AttributionMethod, Backend, Execution, ExposureReport, Mode, ResistanceRegistry, ScoringConfig};
use pqready_server::{AppState, ServerConfig};
use pqready_validation::{run_scheduler, LlmBackend, OllamaClient, Store, StubLlm};

#[derive(Parser)]
#[command(name = "pqready", version, about = "Post-quantum exposure scoring for cryptographic asset graphs")]
struct Cli {
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a snapshot: exposure, PQRI, attribution and top paths.
    Score(ScoreArgs),
    /// Shapley attribution of exposure across domains.
    Attribute(ScoreArgs),
    /// Build a snapshot from scanner JSONL records and a vulnerability feed.
    Ingest {
        #[arg(long)]
        scan_dir: PathBuf,
        #[arg(long)]
        vuln_feed: Option<PathBuf>,
        /// Algorithm resistance registry; the shipped one by default.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP API and the validation scheduler.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, env = "PQREADY_TOKEN")]
        token: Option<String>,
        /// Validate with the deterministic keep-everything stub instead of the inference endpoint.
        #[arg(long)]
        stub_llm: bool,
        /// Do not start the validation scheduler.
        #[arg(long)]
        no_scheduler: bool,
    },
    /// Synthetic graphs, the compromise oracle and validation experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    max_path_len: Option<usize>,
    /// Earlier snapshot to report the relative change in Ê against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Katz,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => Mode::Auto,
            ModeArg::Exact => Mode::ExactPaths,
            ModeArg::Katz => Mode::Katz,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate a synthetic snapshot.
    Gen {
        /// JSON generator spec; flags below override its seed.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare path exposure with the Monte Carlo oracle on node-disjoint-path graphs.
    Oracle {
        #[arg(long, default_value_t = 100)]
        graphs: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank correlation between path and all-walks exposure.
    Correlate {
        /// Base generator spec for the readiness sweep.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized single-parameter bumps checking the sign of ∂E.
    Sensitivity {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        graphs: u64,
        #[arg(long, default_value_t = 1000)]
        bumps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = pqready_core::synth::experiments::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Score(a) => cmd_score(&a, exec, false),
        Command::Attribute(a) => cmd_score(&a, exec, true),
        Command::Ingest { scan_dir, vuln_feed, registry, out } => cmd_ingest(&scan_dir, vuln_feed.as_deref(), registry.as_deref(), &out),
        Command::Serve { port, store, token, stub_llm, no_scheduler } => cmd_serve(port, &store, token, stub_llm, no_scheduler),
        Command::Bench(b) => cmd_bench(b, exec),
    }
}

fn load_graph(path: &Path) -> Result<AssetGraph> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_snapshot(&bytes)?.to_graph()?)
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ScoreOutput<'a> {
    #[serde(flatten)]
    report: &'a ExposureReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_vs_baseline: Option<ReadinessDelta>,
}

fn config_for(graph: &AssetGraph, a: &ScoreArgs, exec: Execution) -> Result<ScoringConfig> {
    let mut cfg = ScoringConfig::from_graph(graph)?.with_mode(a.mode.into()).with_execution(exec);
    if let Some(k) = a.kappa {
        cfg = cfg.with_kappa(k);
    }
    if let Some(l) = a.max_path_len {
        cfg = cfg.with_max_path_len(l);
    }
    Ok(cfg)
}

fn cmd_score(a: &ScoreArgs, exec: Execution, attribution_only: bool) -> Result<()> {
    let graph = load_graph(&a.snapshot)?;
    let cfg = config_for(&graph, a, exec)?;
    let method = match a.method {
        MethodArg::Auto => AttributionMethod::Auto { seed: a.seed },
        MethodArg::Exact => AttributionMethod::Exact,
        MethodArg::Mc => AttributionMethod::MonteCarlo { permutations: a.permutations, seed: a.seed },
    };
    let report = score(&graph, &cfg, method)?;
    if attribution_only {
        return emit(&report.attribution, a.out.as_deref());
    }
    let delta = match &a.baseline {
        Some(p) => {
            let base = load_graph(p)?;
            let base_report = score(&base, &config_for(&base, a, exec)?, method)?;
            Some(readiness_delta(report.normalized_exposure, base_report.normalized_exposure))
        }
        None => None,
    };
    eprintln!(
        "PQRI {:.2}  Ê {:.6}  E {:.6}  backend {:?}  domains {}",
        report.pqri,
        report.normalized_exposure,
        report.raw_exposure,
        report.backend,
        report.domains.len()
    );
    emit(&ScoreOutput { report: &report, delta_vs_baseline: delta }, a.out.as_deref())
}

fn cmd_ingest(scan_dir: &Path, feed: Option<&Path>, registry: Option<&Path>, out: &Path) -> Result<()> {
    let registry = match registry {
        Some(p) => ResistanceRegistry::from_path(p)?,
        None => ResistanceRegistry::shipped(),
    };
    let outcome = ingest_paths(scan_dir, feed, &registry)?;
    let doc = outcome.to_snapshot(chrono::Utc::now());
    fs::write(out, serialize_snapshot(&doc)).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "{} nodes, {} edges; {} attribute conflicts, {} unmatched CVEs, {} rejected vulnerability records, {} dangling relations",
        outcome.graph.node_count(),
        outcome.graph.edge_count(),
        outcome.conflicts.len(),
        outcome.orphans.len(),
        outcome.rejected.len(),
        outcome.dangling.len()
    );
    Ok(())
}

fn cmd_serve(port: u16, store_dir: &Path, token: Option<String>, stub: bool, no_scheduler: bool) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let store = Store::open(store_dir).with_context(|| format!("opening store {}", store_dir.display()))?;
        let state = AppState::new(store.clone(), ServerConfig { bearer_token: token, ..ServerConfig::default() });
        let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);
        let scheduler = (!no_scheduler).then(|| {
            let llm: Arc<dyn LlmBackend> = if stub { Arc::new(StubLlm::approve_all()) } else { Arc::new(OllamaClient::new()) };
            tokio::spawn(run_scheduler(store.clone(), llm, stop_rx))
        });
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        pqready_server::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        info!("shutting down");
        let _ = stop_tx.send(true);
        if let Some(h) = scheduler {
            let _ = h.await;
        }
        Ok(())
    })
}

fn read_spec(path: Option<&Path>) -> Result<GenSpec> {
    let spec: GenSpec = match path {
        Some(p) => serde_json::from_slice(&fs::read(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => GenSpec::default(),
    };
    spec.check()?;
    Ok(spec)
}

#[derive(Serialize)]
struct OracleRow {
    seed: u64,
    nodes: usize,
    exposure: f64,
    estimate: f64,
    standard_error: f64,
    within_3se: bool,
}

#[derive(Serialize)]
struct SensitivityRow {
    backend: Backend,
    parameter: ParameterKind,
    checked: usize,
    violations: usize,
}

fn cmd_bench(b: BenchCommand, exec: Execution) -> Result<()> {
    match b {
        BenchCommand::Gen { spec, seed, out } => {
            let mut spec = read_spec(spec.as_deref())?;
            if let Some(s) = seed {
                spec = spec.with_seed(s);
            }
            let doc = generate(&spec)?;
            fs::write(&out, serialize_snapshot(&doc))?;
            eprintln!("{} nodes, {} edges -> {}", doc.nodes.len(), doc.edges.len(), out.display());
            Ok(())
        }
        BenchCommand::Oracle { graphs, samples, seed, out } => {
            let mut rows = Vec::with_capacity(graphs);
            for i in 0..graphs as u64 {
                let g = generate_disjoint_paths(&DisjointSpec { seed: seed + i, ..DisjointSpec::default() })?;
                let cfg = ScoringConfig::from_graph(&g)?.with_mode(Mode::ExactPaths).with_execution(exec);
                let e = pqready_core::exposure::exposure(&g, cfg.domains.full(), &cfg)?;
                let est = mc_compromise(&g, &cfg, samples, seed + i)?;
                rows.push(OracleRow {
                    seed: seed + i,
                    nodes: g.node_count(),
                    exposure: e,
                    estimate: est.estimate,
                    standard_error: est.standard_error,
                    within_3se: (e - est.estimate).abs() <= 3.0 * est.standard_error,
                });
            }
            let within = rows.iter().filter(|r| r.within_3se).count();
            eprintln!("{within}/{} graphs within 3 SE of the oracle", rows.len());
            emit(&rows, out.as_deref())
        }
        BenchCommand::Correlate { spec, seeds, seed, out } => {
            let base = read_spec(spec.as_deref())?;
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let report = experiment_correlation(&readiness_sweep(&base), &seeds, exec)?;
            match report.spearman {
                Some(r) => eprintln!("spearman {r:.4} over {} graphs", report.graphs),
                None => eprintln!("spearman undefined (constant scores) over {} graphs", report.graphs),
            }
            emit(&report, out.as_deref())
        }
        BenchCommand::Sensitivity { spec, graphs, bumps, seed, delta, out } => {
            let base = read_spec(spec.as_deref())?;
            if graphs == 0 {
                bail!("--graphs must be positive");
            }
            let corpus = (0..graphs)
                .map(|i| generate_graph(&base.clone().with_seed(seed + i)))
                .collect::<pqready_core::Result<Vec<_>>>()?;
            let report = experiment_random_bumps(&corpus, bumps, seed, delta, exec)?;
            let mut rows = Vec::new();
            for backend in [Backend::ExactPaths, Backend::Katz] {
                for kind in [ParameterKind::Resistance, ParameterKind::Exploitability, ParameterKind::Impact] {
                    let t = report.tally(backend, kind);
                    eprintln!("{backend:?} {kind:?}: {} violations of {} bumps", t.violations, t.checked);
                    rows.push(SensitivityRow { backend, parameter: kind, checked: t.checked, violations: t.violations });
                }
            }
            emit(&rows, out.as_deref())
        }
    }
}
