use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elmfem_cli::{execute, parse_config, Mode};

/// Adaptive Eulerian-Lagrangian convection-diffusion solver.
#[derive(Parser)]
#[command(name = "elmfem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the mode configured in the file (adaptive, uniform,
    /// algorithm1-only, convergence, trace-diagnostics).
    Run { config: PathBuf },
    /// Run a temporal convergence study on the configured benchmark.
    Study { config: PathBuf },
    /// Emit characteristic-tracing diagnostics (det-Jacobian CSV).
    Trace { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, override_mode) = match &cli.command {
        Command::Run { config } => (config, None),
        Command::Study { config } => (config, Some(Mode::Convergence)),
        Command::Trace { config } => (config, Some(Mode::TraceDiagnostics)),
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    };
    match execute(&config, override_mode) {
        Ok(summary) => {
            println!(
                "done: {} steps, artifacts in {}",
                summary.steps,
                summary.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
