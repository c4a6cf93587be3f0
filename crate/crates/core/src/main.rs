use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotflow::cli_io::{commands, Context, RunConfig, EXIT_INPUT};

/// Forchheimer flow in rotating porous media: simulation and numerical
/// certification of a priori estimates.
#[derive(Debug, Parser)]
#[command(name = "rotflow", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true, env = "ROTFLOW_OUT")]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver and write snapshots and diagnostics.
    Simulate,
    /// Run a verification suite: constitutive, elementary or composites.
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// Estimate the composite-inequality constants on the calibration corpus.
    Calibrate,
    /// Run the full certification pipeline.
    Certify,
    /// Manufactured-solution convergence study.
    Mms,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT as u8),
            };
        }
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(EXIT_INPUT as u8);
    };
    let mut config = match RunConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.or_else(|| config.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("rotflow_out"));
    let ctx = Context { config: &config, out };
    let code = match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Verify { suite } => commands::verify(&ctx, &suite),
        Command::Calibrate => commands::calibrate(&ctx),
        Command::Certify => commands::certify_cmd(&ctx),
        Command::Mms => commands::mms(&ctx),
    };
    ExitCode::from(code as u8)
}
