use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcs_sim::scenario::{Command, Scenario};
use qcs_sim::QcsError;

/// Satellite clock-synchronization network simulator.
#[derive(Parser)]
#[command(name = "qcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-station connection traces
    Trace(Common),
    /// Pairwise sync traces
    Sync(Common),
    /// Figures of merit per station pair
    Fom(Common),
    /// Static two-way offset Monte Carlo
    Static(Common),
    /// Ground-separation sweep
    Sweep(Common),
    /// Shadow diameter and elongation
    Shadow(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the scenario file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON mirror of every table.
    #[arg(long)]
    json: bool,
}

fn threads() -> Result<(), QcsError> {
    let Ok(v) = std::env::var("QCS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| QcsError::Config(format!("QCS_THREADS must be a thread count, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| QcsError::Config(format!("thread pool: {e}")))
}

fn run(cmd: Command, args: Common) -> Result<(), QcsError> {
    threads()?;
    let mut sc = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    let dir = args.out.unwrap_or_else(|| sc.output.dir.clone());
    let json = args.json || sc.output.json;
    let out = cmd.run(&sc)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    out.save(&dir, json)?;
    for t in &out.tables {
        eprintln!("wrote {}/{}.csv ({} rows)", dir.display(), t.name, t.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Trace(a) => (Command::Trace, a),
        Cmd::Sync(a) => (Command::Sync, a),
        Cmd::Fom(a) => (Command::Fom, a),
        Cmd::Static(a) => (Command::Static, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Shadow(a) => (Command::Shadow, a),
    };
    match run(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
