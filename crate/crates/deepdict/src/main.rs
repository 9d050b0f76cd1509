use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deepdict::experiments::{self, CommonOpts};

#[derive(Parser)]
#[command(
    name = "deepdict",
    about = "Deep dictionary learning: model synthesis, sequential factorization, and random-matrix checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the per-column sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Factorization direction: forward | backward | both.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Use the full-size reference configuration (long run).
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a deep model instance and write it to disk.
    Generate,
    /// Run forward/backward factorization on a stored instance.
    Factorize,
    /// Error-vs-initialization-SNR sweep over a grid and seeds.
    SnrSweep,
    /// Measure the recovery assumptions on a stored instance.
    Audit,
    /// Estimate a restricted isometry constant of a stored matrix.
    Rip,
    /// Coupon-collector draw-count Monte Carlo.
    Coupon,
    /// End-to-end recovery experiment (generate + factorize + CSV).
    ExperimentRecovery,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = CommonOpts {
        config: cli.config,
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out,
        mode: cli.mode,
        paper_scale: cli.paper_scale,
    };
    let result = match cli.command {
        Command::Generate => experiments::cmd_generate(&common),
        Command::Factorize => experiments::cmd_factorize(&common),
        Command::SnrSweep => experiments::cmd_snr_sweep(&common),
        Command::Audit => experiments::cmd_audit(&common),
        Command::Rip => experiments::cmd_rip(&common),
        Command::Coupon => experiments::cmd_coupon(&common),
        Command::ExperimentRecovery => experiments::cmd_experiment_recovery(&common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
