use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use modstab::{BranchChoice, Result};

mod commands;
mod config;
mod output;

use commands::Context;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "modstab",
    version,
    about = "Modulational stability of periodic NLS travelling waves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file (default: the config's `out`, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Which state variable the modulation system eliminates.
    #[arg(long, global = true, value_enum)]
    branch: Option<BranchArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Turning points, Ω-validity and genericity at the constrained point.
    Check,
    /// Action derivatives and conversion identities at the raw point.
    Jet,
    /// Normal form against Whitham characteristics, at a point or over a batch.
    Verify,
    /// Stability map over a two-parameter grid (CSV).
    Sweep,
    /// Floquet–Bloch eigenvalues near the origin and their slopes (CSV).
    Spectrum,
}

#[derive(ValueEnum, Clone, Copy)]
enum BranchArg {
    Auto,
    #[value(name = "eliminate_h")]
    EliminateH,
    #[value(name = "eliminate_j")]
    EliminateJ,
}

impl From<BranchArg> for BranchChoice {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Auto => BranchChoice::Auto,
            BranchArg::EliminateH => BranchChoice::EliminateH,
            BranchArg::EliminateJ => BranchChoice::EliminateJ,
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let path = cli
        .config
        .ok_or_else(|| modstab::Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(b) = cli.branch {
        cfg.branch = b.into();
    }
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| modstab::Error::Config(format!("--jobs: {e}")))?;
    }
    let out = cli.out.or_else(|| cfg.out.clone());
    let ctx = Context::new(cfg)?;
    let out = out.as_deref();
    match cli.command {
        Command::Check => commands::check(&ctx, out),
        Command::Jet => commands::jet(&ctx, out),
        Command::Verify => commands::verify(&ctx, out),
        Command::Sweep => commands::sweep(&ctx, out),
        Command::Spectrum => commands::spectrum(&ctx, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("modstab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
