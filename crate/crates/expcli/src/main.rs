use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nbsm_expcli::compare::compare;
use nbsm_expcli::{ExperimentFile, Overrides, Report, Result};

/// Run nondestructive Bell-state measurement experiments from TOML files.
///
/// The worker count is taken from `NBSM_WORKERS` (default: all cores).
#[derive(Parser)]
#[command(name = "nbsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment and write its report directory.
    Run {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        /// ideal, noisy-exact or noisy-sampled.
        #[arg(long)]
        mode: Option<String>,
        /// Output directory, replacing `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment file without running it.
    Validate { spec: PathBuf },
    /// Compare two reports (files or run directories), `a − b`.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write the comparison as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_workers() -> Result<(), String> {
    let Ok(v) = std::env::var("NBSM_WORKERS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("NBSM_WORKERS: `{v}` is not a worker count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn real_main() -> Result<(), String> {
    let cli = Cli::parse();
    configure_workers()?;
    match cli.command {
        Command::Run { spec, seed, shots, mode, out } => {
            let (report, dir) = nbsm_expcli::run::run_file(&spec, &Overrides { seed, shots, mode, out })
                .map_err(|e| e.to_string())?;
            println!("{} ({}) -> {}", report.kind.label(), report.mode.label(), dir.display());
            for f in &report.fidelities {
                println!("  F[{} -> {}] = {:.4}", f.outcome, f.target, f.fidelity);
            }
            for (k, v) in &report.summary {
                println!("  {k} = {v:.6e}");
            }
        }
        Command::Validate { spec } => {
            let s = ExperimentFile::load(&spec).and_then(|f| f.resolve()).map_err(|e| e.to_string())?;
            println!("{}: ok ({} run, {} mode)", spec.display(), s.kind.label(), s.mode.label());
        }
        Command::Compare { a, b, out } => {
            let ra = Report::load(&a).map_err(|e| e.to_string())?;
            let rb = Report::load(&b).map_err(|e| e.to_string())?;
            let c = compare(&ra, &rb).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&c).map_err(|e| e.to_string())?;
            if let Some(path) = out {
                std::fs::write(&path, format!("{text}\n")).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
