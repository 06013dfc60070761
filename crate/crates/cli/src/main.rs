use std::path::PathBuf;
use std::process::ExitCode;

use brt_cli::commands::{self, Functional};
use clap::{Parser, Subcommand};

/// Simulate branching random tessellations and estimate their
/// thermodynamic functionals.
#[derive(Parser)]
#[command(name = "brt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write JSONL event logs.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Log file for one replicate, directory for several.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, then estimate a functional; prints CSV.
    Estimate {
        config: PathBuf,
        #[arg(long, value_enum)]
        functional: Functional,
        /// Target kernel as a JSON fragment, or `@path` to read one.
        #[arg(long = "target-kernel")]
        target_kernel: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the state of a logged history at one time as SVG.
    Render {
        log: PathBuf,
        /// Defaults to the end of the history.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "allow-1d")]
        allow_1d: bool,
        /// Print the time in a corner of the frame.
        #[arg(long)]
        stamp: bool,
    },
    /// Run validation checks and print a pass/fail table.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 20240601)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("BRT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: BRT_THREADS ignored: {e}");
        }
    }
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config, seed, out } => commands::cmd_simulate(&config, seed, out),
        Command::Estimate { config, functional, target_kernel, seed, out } => {
            commands::cmd_estimate(&config, functional, target_kernel.as_deref(), seed, out)
        }
        Command::Render { log, time, out, allow_1d, stamp } => commands::cmd_render(&log, time, out, allow_1d, stamp),
        Command::Validate { suite, seed } => commands::cmd_validate(&suite, seed),
    };
    ExitCode::from(code as u8)
}
