//! Operator entry point: scenario generation, single runs, benchmark
//! sweeps, and report regeneration.
//!
//! Exit codes: 0 success, 1 runtime error, 2 configuration or
//! precondition error (including a missing API key for remote backends).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use genainet_core::dpc::analyze_feasibility;
use genainet_core::gateway::{Gateway, GatewayConfig, API_KEY_ENV};
use genainet_core::persist;
use genainet_core::radio::generate_scenario;
use genainet_core::report;
use genainet_core::rng::stream_seed;
use genainet_core::runlog::{BackendKind, RunConfig, RunMode, RunSummary, SCHEMA_VERSION};
use genainet_core::sim::{self, SweepConfig};
use genainet_core::{Error as CoreError, GenConfig};

#[derive(Parser)]
#[command(name = "genainet", version, about = "Distributed power control benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario tools.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// Print the feasibility analysis of a scenario file as JSON.
    Analyze {
        /// Scenario file produced by `scenario gen`.
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Execute one run of a policy on a scenario file.
    Run(RunArgs),
    /// Run the full (user count x mode x scenario) grid and write the
    /// comparison table.
    Sweep(SweepArgs),
    /// Regenerate summaries and trajectory CSVs from persisted run logs.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Generate seeded scenario files plus a manifest.
    Gen(ScenarioGenArgs),
}

#[derive(Args)]
struct ScenarioGenArgs {
    /// Number of transmitter-receiver pairs.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How many scenarios to write.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Keep only scenarios on which the classical baseline diverges.
    #[arg(long)]
    divergent_only: bool,
    /// Override the default power cap (watts).
    #[arg(long)]
    p_max: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "scenarios")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file produced by `scenario gen`.
    #[arg(long)]
    scenario: PathBuf,
    /// Policy: dpc, genai_alone, or genainet.
    #[arg(long, value_parser = parse_mode)]
    mode: RunMode,
    /// Decision maker for agent modes: scripted or remote.
    #[arg(long, default_value = "scripted", value_parser = parse_backend)]
    backend: BackendKind,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for run artifacts.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    #[command(flatten)]
    remote: RemoteArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated user counts.
    #[arg(long, value_delimiter = ',', default_value = "2,4,10")]
    users: Vec<usize>,
    /// Scenarios per user count.
    #[arg(long, default_value_t = 25)]
    per: usize,
    /// Comma-separated modes, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all", value_parser = parse_mode_spec)]
    modes: Vec<ModeSpec>,
    #[arg(long, default_value = "scripted", value_parser = parse_backend)]
    backend: BackendKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    /// Cap on parallel runs (default: one per CPU).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for the sweep artifacts.
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
    #[command(flatten)]
    remote: RemoteArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing run logs: a sweep directory (manifest.json
    /// present) or any tree of run directories.
    #[arg(long)]
    logs: PathBuf,
    /// Where to write the regenerated summary table (default: --logs).
    /// Per-run summaries and trajectories are rewritten in place.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Connection flags, consulted only with `--backend remote`.
#[derive(Args)]
struct RemoteArgs {
    /// Endpoint root; requests go to {base-url}/chat/completions.
    #[arg(long, default_value = "http://localhost:8000/v1")]
    base_url: String,
    /// Model name sent to the endpoint.
    #[arg(long, default_value = "local-model")]
    model: String,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    timeout_secs: Option<u64>,
}

#[derive(Clone)]
enum ModeSpec {
    All,
    One(RunMode),
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    RunMode::parse_label(s).ok_or_else(|| format!("expected dpc, genai_alone, or genainet, got {s:?}"))
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    match s {
        "scripted" => Ok(BackendKind::Scripted),
        "remote" => Ok(BackendKind::Remote),
        _ => Err(format!("expected scripted or remote, got {s:?}")),
    }
}

fn parse_mode_spec(s: &str) -> Result<ModeSpec, String> {
    if s == "all" {
        Ok(ModeSpec::All)
    } else {
        parse_mode(s).map(ModeSpec::One)
    }
}

fn resolve_modes(specs: &[ModeSpec]) -> Vec<RunMode> {
    if specs.iter().any(|m| matches!(m, ModeSpec::All)) {
        return RunMode::ALL.to_vec();
    }
    specs
        .iter()
        .map(|m| match m {
            ModeSpec::One(mode) => *mode,
            ModeSpec::All => unreachable!(),
        })
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Print to stdout, treating a vanished reader (EPIPE under `head`, ...)
/// as a normal end of output rather than a panic.
fn print_stdout(text: &str) {
    use std::io::Write;
    if std::io::stdout().write_all(text.as_bytes()).is_err() {
        std::process::exit(0);
    }
}

/// Build the gateway configuration, insisting on the API key up front so
/// remote invocations fail before any network activity.
fn remote_config(remote: &RemoteArgs) -> anyhow::Result<GatewayConfig> {
    let mut config = GatewayConfig::new(&remote.base_url, &remote.model).with_env_key();
    if config.api_key.is_none() {
        return Err(CoreError::MissingApiKey(API_KEY_ENV).into());
    }
    if let Some(t) = remote.temperature {
        config.temperature = t;
    }
    if let Some(t) = remote.timeout_secs {
        config.timeout_secs = t;
    }
    Ok(config)
}

fn cmd_scenario_gen(args: ScenarioGenArgs) -> anyhow::Result<()> {
    if args.count == 0 {
        return Err(CoreError::InvalidScenario("--count must be >= 1".into()).into());
    }
    let mut gen = GenConfig::default();
    if let Some(p_max) = args.p_max {
        gen.p_max = p_max;
    }

    let (scenarios, draws) = if args.divergent_only {
        let batch = sim::generate_divergent_batch_with(args.n, args.count, args.seed, &gen)?;
        let draws = batch.draws;
        (batch.scenarios, draws)
    } else {
        let scenarios = (0..args.count)
            .map(|i| {
                generate_scenario(stream_seed(args.seed, "scenario", &[i as u64]), args.n, &gen)
            })
            .collect::<Result<Vec<_>, _>>()?;
        (scenarios, args.count)
    };

    let mut files = Vec::with_capacity(scenarios.len());
    for (i, scenario) in scenarios.iter().enumerate() {
        let feasibility = analyze_feasibility(scenario)?;
        let name = format!("scenario_n{:02}_s{}_i{:03}.json", args.n, args.seed, i);
        persist::save_scenario_with_feasibility(&args.out.join(&name), scenario, &feasibility)?;
        files.push(name);
    }

    let manifest = persist::ScenarioSetManifest {
        schema_version: SCHEMA_VERSION,
        n_pairs: args.n,
        seed: args.seed,
        count: args.count,
        divergent_only: args.divergent_only,
        draws,
        gen_config_sha256: sha256_hex(&serde_json::to_vec(&gen)?),
        files: files.clone(),
    };
    persist::save_scenario_set_manifest(&args.out, &manifest)?;

    for name in &files {
        print_stdout(&format!("{}\n", args.out.join(name).display()));
    }
    Ok(())
}

fn cmd_analyze(path: &Path) -> anyhow::Result<()> {
    let scenario = persist::load_scenario(path)?;
    let feasibility = analyze_feasibility(&scenario)?;
    print_stdout(&format!("{}\n", serde_json::to_string_pretty(&feasibility)?));
    Ok(())
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let mut config = RunConfig::new(args.mode, args.rounds, args.backend, args.seed);
    config.scenario_ref = Some(args.scenario.display().to_string());

    let log = if args.backend == BackendKind::Remote && args.mode != RunMode::Dpc {
        let gateway = Gateway::new(remote_config(&args.remote)?)?;
        sim::run_with_backend(&scenario, &config, &gateway)?
    } else {
        sim::run(&scenario, &config)?
    };

    persist::save_run(&args.out, &log)?;
    let s = &log.summary;
    let msgs = s
        .msgs_per_tx
        .map(|m| format!(" msgs_per_tx={m:.2}"))
        .unwrap_or_default();
    print_stdout(&format!(
        "mode={} rounds={} rate_gap_kbps={:.3} total_power_w={:.3}{}\n",
        log.config.mode.label(),
        log.config.rounds,
        s.rate_gap_kbps,
        s.total_power_w,
        msgs,
    ));
    eprintln!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let config = SweepConfig {
        user_counts: args.users.clone(),
        scenarios_per_count: args.per,
        modes: resolve_modes(&args.modes),
        backend: args.backend,
        seed: args.seed,
        rounds: args.rounds,
    };
    let gateway_config = if args.backend == BackendKind::Remote {
        Some(remote_config(&args.remote)?)
    } else {
        None
    };

    let outcome = match args.jobs {
        Some(0) => return Err(CoreError::InvalidScenario("--jobs must be >= 1".into()).into()),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()?
            .install(|| sim::sweep(&config, gateway_config.as_ref()))?,
        None => sim::sweep(&config, gateway_config.as_ref())?,
    };

    persist::save_sweep(&args.out, &config, &outcome)?;
    print_stdout(&report::sweep_csv(&outcome.rows));
    eprintln!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let out = args.out.unwrap_or_else(|| args.logs.clone());

    // (n_pairs, mode, recomputed summary) in report order.
    let mut entries: Vec<(usize, RunMode, RunSummary)> = Vec::new();
    let sweep_config = if args.logs.join("manifest.json").is_file() {
        let manifest = persist::load_manifest(&args.logs)?;
        let runs = persist::load_sweep_runs(&args.logs)?;
        for (entry, run) in manifest.runs.iter().zip(&runs) {
            let summary = persist::regenerate_run_artifacts(&args.logs.join(&entry.dir), &run.log)?;
            entries.push((run.n_pairs, run.mode, summary));
        }
        Some(manifest.config)
    } else {
        let dirs = persist::scan_run_dirs(&args.logs)?;
        for dir in &dirs {
            let log = persist::load_run(dir)?;
            let summary = persist::regenerate_run_artifacts(dir, &log)?;
            entries.push((log.scenario.n_pairs, log.config.mode, summary));
        }
        entries.sort_by_key(|&(n, mode, _)| (n, mode));
        None
    };

    if entries.is_empty() {
        eprintln!("warning: no run logs under {}", args.logs.display());
    }

    let mut rows = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let (n, mode, _) = entries[i];
        let mut summaries = Vec::new();
        while i < entries.len() && entries[i].0 == n && entries[i].1 == mode {
            summaries.push(entries[i].2.clone());
            i += 1;
        }
        rows.push(report::aggregate_rows(n, mode, &summaries)?);
    }

    match sweep_config {
        Some(config) => persist::write_summary_artifacts(&out, &config, &rows)?,
        None => {
            std::fs::create_dir_all(&out)?;
            persist::atomic_write(&persist::sweep_csv_path(&out), report::sweep_csv(&rows).as_bytes())?;
        }
    }
    print_stdout(&report::sweep_csv(&rows));
    Ok(())
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Scenario { command: ScenarioCommand::Gen(args) } => cmd_scenario_gen(args),
        Command::Analyze { scenario } => cmd_analyze(&scenario),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::MissingApiKey(_)) | Some(CoreError::InvalidScenario(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
