//! `krein`: forward scattering, inversion, round trips and admissibility checks for
//! half-line Schrödinger scattering data.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use krein_core::Method;
use log::{info, warn};

use crate::commands::Context;
use crate::config::Config;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "krein", version, about = "Half-line inverse scattering by Krein's method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Inversion method: krein, marchenko, gl or hybrid.
    #[arg(long, global = true)]
    method: Option<Method>,
    /// Output directory (default: io.out_dir from the config, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Potential -> S(k), phase shift, Jost function, bound states.
    Forward,
    /// S(k) -> q(x) plus a JSON report.
    Invert,
    /// Forward -> invert -> forward with q and S defects.
    Roundtrip,
    /// Admissibility diagnostics of S(k) only.
    Check,
}

fn init_threads() {
    let Ok(v) = std::env::var("SCATTER_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("could not size the worker pool: {e}");
            }
        }
        _ => warn!("ignoring SCATTER_THREADS={v:?}; expected a positive integer"),
    }
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let method = cli.method.unwrap_or(cfg.method);
    let out = match (&cli.out, &cfg.io.out_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => cfg.resolve(o),
        (None, None) => PathBuf::from("out"),
    };
    info!("{:?} with method {method}, writing to {}", cli.command, out.display());
    let ctx = Context { cfg, out };
    match cli.command {
        Command::Forward => commands::forward(&ctx),
        Command::Invert => commands::invert_cmd(&ctx, method),
        Command::Roundtrip => commands::roundtrip_cmd(&ctx, method),
        Command::Check => commands::check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    init_threads();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
