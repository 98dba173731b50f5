mod commands;
mod config;
mod error;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::OutputDir;

#[derive(Parser)]
#[command(name = "qwalk", version, about = "Coined quantum walks on N-dimensional lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (overrides `threads` in the configuration).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a wave packet and write probability snapshots and moments.
    Evolve(RunArgs),
    /// Sample dispersion sheets, group velocities and degeneracies.
    Dispersion(RunArgs),
    /// Radial profile and ring features at the conical point.
    Diabolo(RunArgs),
    /// Exact walk against the continuum envelope prediction.
    Compare(RunArgs),
    /// Keep only selected branches of the initial packet, then evolve.
    Project(RunArgs),
    /// Print a desk-scale preset configuration.
    Preset {
        /// Preset name; omit to list them.
        name: Option<String>,
        /// Write the configuration here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the checksums listed in an output directory's manifest.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_with(args: &RunArgs, f: fn(&RunConfig, &mut OutputDir) -> Result<(), CliError>) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let threads = args.threads.or(cfg.threads);
    let mut out = OutputDir::create(&args.out)?;
    out.write("config.toml", cfg.to_toml().as_bytes())?;
    let result = match threads {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Config("--threads must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| f(&cfg, &mut out))
        }
        None => f(&cfg, &mut out),
    };
    if let Err(e) = &result {
        output::record(format!("error: {e}"));
    }
    let root = out.finish()?;
    result?;
    eprintln!("outputs written to {}", root.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evolve(a) => run_with(&a, commands::evolve),
        Command::Dispersion(a) => run_with(&a, commands::dispersion),
        Command::Diabolo(a) => run_with(&a, commands::diabolo),
        Command::Compare(a) => run_with(&a, commands::compare),
        Command::Project(a) => run_with(&a, commands::project),
        Command::Preset { name: None, .. } => {
            for p in presets::PRESETS {
                println!("{:<14} {:<10} {}", p.name, p.command, p.note);
            }
            Ok(())
        }
        Command::Preset { name: Some(name), out } => {
            let p = presets::find(&name).ok_or_else(|| {
                CliError::Config(format!("unknown preset {name:?}; available: {}", presets::names().join(", ")))
            })?;
            match out {
                Some(path) => std::fs::write(&path, p.render())?,
                None => print!("{}", p.render()),
            }
            Ok(())
        }
        Command::Verify { out } => {
            let n = output::verify(&out)?;
            println!("{n} file(s) verified");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    output::install_logger();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qwalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
