use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vpem_cli::{Failure, Overrides};

#[derive(Parser)]
#[command(name = "vpem", version, about = "Bias and MSE of purification-mitigated phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Replaces the configured seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Fock cutoff per mode.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Total shots per estimate.
    #[arg(long, global = true)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario configuration.
    Run { config: PathBuf },
    /// Reproduce one of the canonical figures.
    Figure {
        name: String,
        /// Only write the embedded configuration.
        #[arg(long)]
        config_only: bool,
    },
    /// Optimal reference points for each series.
    Refpoint { config: PathBuf },
    /// Expansion coefficients in the noise strength.
    Coeffs { config: PathBuf },
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    let f = &cli.flags;
    if let Some(t) = f.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::config("threads", e.to_string()))?;
    }
    let overrides = Overrides {
        seed: f.seed,
        cutoff: f.cutoff,
        shots: f.shots,
    };
    match &cli.command {
        Command::Run { config } => vpem_cli::run(&vpem_cli::load(config, overrides)?, &f.out_dir),
        Command::Refpoint { config } => vpem_cli::refpoint(&vpem_cli::load(config, overrides)?, &f.out_dir),
        Command::Coeffs { config } => vpem_cli::coeffs(&vpem_cli::load(config, overrides)?, &f.out_dir),
        Command::Figure { name, config_only: true } => {
            let text = vpem_cli::figures::config_text(name)
                .ok_or_else(|| Failure::config("figure", format!("unknown figure {name:?}")))?;
            std::fs::create_dir_all(&f.out_dir)?;
            let path = f.out_dir.join(format!("{name}.toml"));
            std::fs::write(&path, text)?;
            Ok(vec![path])
        }
        Command::Figure { name, .. } => vpem_cli::figure(name, overrides, &f.out_dir),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
