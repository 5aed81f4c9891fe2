//! Command-line front end: run a task corpus, sweep abandonment
//! parameters, probe an MCP endpoint, or serve the bundled mock server.
//!
//! Exit codes: 0 on success, 1 when a suite or probe fails, 2 on usage
//! errors (clap's default).

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use autono::harness::{load_corpus, run_suite, sweep, sweep_csv, RuntimeConfig};
use autono::mcp::mock::{default_manifest, MockServer};
use autono::mcp::{adapt, open_session, McpEndpoint};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "autono", version, about = "agent runtime driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a task corpus and report per-category success rates.
    Run(RunArgs),
    /// Monte Carlo sweep of the abandonment gate; prints CSV.
    Sweep(SweepArgs),
    /// MCP client operations.
    #[command(subcommand)]
    Mcp(McpCommand),
    /// Serve the bundled mock MCP server on stdio.
    ServeMock(ServeMockArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Corpus JSON file.
    #[arg(long)]
    corpus: PathBuf,
    /// Runtime config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Zero the wall-clock stamp for byte-stable output.
    #[arg(long)]
    golden: bool,
    /// Print the plain-text summary table instead of JSON.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Initial abandonment probabilities (repeatable).
    #[arg(long = "p0", required = true)]
    p0s: Vec<f64>,
    /// Penalty factors (repeatable).
    #[arg(long = "beta", required = true)]
    betas: Vec<f64>,
    /// Simulated runs per (p0, beta) cell.
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Per-run check cap for non-terminating configs.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum McpCommand {
    /// Handshake with a server and list its tools as adapted specs.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct ProbeArgs {
    /// Command line to spawn a stdio server.
    #[arg(long, group = "endpoint")]
    stdio: Option<String>,
    /// WebSocket URL (ws://...).
    #[arg(long, group = "endpoint")]
    ws: Option<String>,
    /// SSE base URL (http://...).
    #[arg(long, group = "endpoint")]
    sse: Option<String>,
}

#[derive(Args)]
struct ServeMockArgs {
    /// Tool manifest JSON file; defaults to the built-in two-tool set.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Advertise a different protocol revision (for failure testing).
    #[arg(long)]
    protocol_version: Option<String>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Mcp(McpCommand::Probe(args)) => cmd_probe(args),
        Command::ServeMock(args) => cmd_serve_mock(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let corpus = load_corpus(&args.corpus).map_err(|e| e.to_string())?;
    let mut config = RuntimeConfig::from_file(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let report = run_suite(&corpus, &config);
    let rendered = if args.table {
        report.to_table()
    } else if args.golden {
        report.to_json_golden()
    } else {
        report.to_json()
    };
    match &args.output {
        Some(path) => std::fs::write(path, rendered).map_err(|e| e.to_string())?,
        None => println!("{rendered}"),
    }
    if report.mismatches.is_empty() {
        Ok(())
    } else {
        Err(format!("{} task(s) deviated from expectation: {}", report.mismatches.len(), report.mismatches.join(", ")))
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let rows = sweep(&args.p0s, &args.betas, args.runs, args.seed, args.cap);
    let csv = sweep_csv(&rows);
    match &args.output {
        Some(path) => std::fs::write(path, csv).map_err(|e| e.to_string()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_probe(args: ProbeArgs) -> Result<(), String> {
    let endpoint = match (args.stdio, args.ws, args.sse) {
        (Some(cmd), None, None) => McpEndpoint::Stdio(cmd),
        (None, Some(url), None) => McpEndpoint::Websocket(url),
        (None, None, Some(url)) => McpEndpoint::Sse(url),
        _ => return Err("exactly one of --stdio, --ws, --sse is required".into()),
    };
    let mut session = open_session(&endpoint).map_err(|e| e.to_string())?;
    let descriptors = session.list_tools().map_err(|e| e.to_string())?;
    println!("session {} ready; {} tool(s)", session.session_id(), descriptors.len());
    let shared = Arc::new(Mutex::new(session));
    for descriptor in &descriptors {
        match adapt(descriptor, Arc::clone(&shared)) {
            Ok((spec, _tool)) => {
                let params: Vec<String> = spec
                    .params
                    .iter()
                    .map(|p| {
                        format!(
                            "{}: {:?}{}",
                            p.name,
                            p.param_type,
                            if p.required { "" } else { " (optional)" }
                        )
                    })
                    .collect();
                println!("  {}({}) - {}", spec.name, params.join(", "), spec.description);
            }
            Err(e) => println!("  {} - skipped: {e}", descriptor.name),
        }
    }
    shared.lock().unwrap().close();
    Ok(())
}

fn cmd_serve_mock(args: ServeMockArgs) -> Result<(), String> {
    let server = match &args.manifest {
        Some(path) => MockServer::from_manifest_file(path)
            .map_err(|e| format!("manifest {}: {e}", path.display()))?,
        None => MockServer::from_manifest_json(default_manifest()).expect("built-in manifest"),
    };
    let server = match args.protocol_version {
        Some(version) => server.with_protocol_version(&version),
        None => server,
    };
    server.serve_stdio().map_err(|e| e.to_string())
}
