mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nspp::Location;

use crate::commands::{FitArgs, SimulateArgs, SummarizeArgs};
use crate::error::{CliError, CliResult};

/// Piecewise nonstationary Poisson process intensity estimation.
#[derive(Parser)]
#[command(name = "nspp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a point pattern from the [truth] section of a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the true intensity on the configured mesh.
        #[arg(long)]
        truth_mesh: bool,
    },
    /// Run the sampler, or continue a run from its checkpoint.
    Fit {
        /// CSV file with header `x,y`.
        points: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Checkpoint of an earlier run; output is appended to its directory.
        #[arg(long, conflicts_with_all = ["points", "config", "out"])]
        resume: Option<PathBuf>,
        #[arg(long)]
        iters: Option<u64>,
        #[arg(long)]
        burnin: Option<u64>,
        #[arg(long)]
        thin: Option<u64>,
        #[arg(long = "L")]
        regions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Posterior surfaces and tables from a run directory.
    Summarize {
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// True intensity on the same mesh (x,y,value).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Mesh size `n` or `nx,ny`.
        #[arg(long)]
        mesh: Option<String>,
        /// Reference locations `x y; x y`.
        #[arg(long)]
        references: Option<String>,
    },
    /// Run a verification suite: geweke or acceptance-oracle.
    Check {
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_mesh(s: &str) -> CliResult<(usize, usize)> {
    let v: Vec<usize> = s
        .split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::config(format!("--mesh: cannot parse `{t}`")))
        })
        .collect::<CliResult<_>>()?;
    match v.as_slice() {
        [n] if *n > 0 => Ok((*n, *n)),
        [nx, ny] if *nx > 0 && *ny > 0 => Ok((*nx, *ny)),
        _ => Err(CliError::config("--mesh: expected `n` or `nx,ny` with positive sizes")),
    }
}

fn parse_locations(s: &str) -> CliResult<Vec<Location>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v: Vec<f64> = t
                .split_whitespace()
                .map(|x| {
                    x.parse()
                        .map_err(|_| CliError::config(format!("--references: cannot parse `{x}`")))
                })
                .collect::<CliResult<_>>()?;
            match v.as_slice() {
                [x, y] => Ok(Location::new(*x, *y)),
                _ => Err(CliError::config(format!(
                    "--references: expected `x y`, got `{}`",
                    t.trim()
                ))),
            }
        })
        .collect()
}

fn set_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("NSPP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("NSPP_THREADS: cannot parse `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("NSPP_THREADS: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    set_threads()?;
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            truth_mesh,
        } => {
            commands::simulate(&SimulateArgs {
                config,
                out,
                seed,
                truth_mesh,
            })?;
        }
        Command::Fit {
            points,
            config,
            out,
            resume,
            iters,
            burnin,
            thin,
            regions,
            seed,
        } => {
            commands::fit(&FitArgs {
                points,
                config,
                out,
                resume,
                iters,
                burnin,
                thin,
                regions,
                seed,
            })?;
        }
        Command::Summarize {
            run,
            out,
            truth,
            mesh,
            references,
        } => {
            let mesh = mesh.as_deref().map(parse_mesh).transpose()?;
            let references = references.as_deref().map(parse_locations).transpose()?;
            commands::summarize(&SummarizeArgs {
                run,
                out,
                truth,
                mesh,
                references,
            })?;
        }
        Command::Check { suite, n, seed } => return commands::check(&suite, n, seed),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
