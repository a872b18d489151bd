use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use usc_cli::config::{LoadedConfig, Overrides};
use usc_cli::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "usc", version, about = "Run qubit-resonator dissipation experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweep points (0: one per core).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    workers: usize,

    /// Fock truncation; overrides `numerics.n_max`.
    #[arg(long, global = true, value_name = "N")]
    nmax: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment and write CSV tables and a manifest.
    Run { config: PathBuf },
    /// Check the config and report warnings without computing.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let overrides = Overrides { out: cli.out.clone(), n_max: cli.nmax };
    match &cli.command {
        Command::Run { config } => {
            let cfg = LoadedConfig::load(config, &overrides)?;
            for path in usc_cli::run(&cfg, cli.workers)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Validate { config } => {
            let cfg = LoadedConfig::load(config, &overrides)?;
            let warnings = usc_cli::validate::validate(&cfg)?;
            for w in &warnings {
                println!("{w}");
            }
            println!("{}: {} warning(s)", config.display(), warnings.len());
        }
    }
    Ok(())
}
