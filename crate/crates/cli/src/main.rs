use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csd1d_cli::{run_convergence, run_solve, run_verify, Exit, VerifyOptions};

#[derive(Parser)]
#[command(name = "csd1d", version, about = "1+1D Chern-Simons-Dirac lattice solver and estimate checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and run its checks.
    Solve {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded verification suite (or `all`).
    Verify {
        suite: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Multiplies the generated data.
        #[arg(long, default_value_t = 1.0)]
        data_scale: f64,
    },
    /// Grid refinement study at n, 2n, 4n, ...
    Convergence {
        config: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out } => run_solve(&config, out.as_deref()),
        Command::Verify {
            suite,
            seed,
            out,
            data_scale,
        } => run_verify(
            &suite,
            &VerifyOptions {
                seed,
                out,
                data_scale,
            },
        ),
        Command::Convergence { config, levels, out } => run_convergence(&config, levels, out.as_deref()),
    };
    let exit = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit()
    });
    if exit == Exit::ChecksFailed {
        eprintln!("some checks failed");
    }
    ExitCode::from(exit.code() as u8)
}
