//! `fpt`: convergence, interpolation and probability studies for the space-time solver.

mod config;
mod plot;
mod run;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use plot::PlotKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("bad input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "fpt", version, about = "First-hitting-time probabilities via a space-time minimal residual method")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores (overrides `threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Monte Carlo seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement errors ||e_{h/2} - e_h|| over the test set.
    Convergence,
    /// Sparse interpolation errors over the test set for every h and q.
    Interpolate,
    /// Hitting probabilities next to a Monte Carlo estimate.
    Probability,
    /// Log-log SVG of a CSV written by `convergence` or `interpolate`.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "convergence")]
        kind: String,
    },
    /// Closed-form sanity checks.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::parse("")?,
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Command::Plot { csv, kind } = &cli.command {
        let kind: PlotKind = kind.parse()?;
        let text = std::fs::read_to_string(csv).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
        let series = plot::read_series(&text, kind)?;
        let dir = match &cli.out {
            Some(d) => d.clone(),
            None => csv.parent().map(PathBuf::from).unwrap_or_default(),
        };
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(e.to_string()))?;
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
        let path = dir.join(format!("{stem}.svg"));
        std::fs::write(&path, plot::render(&series, kind))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
        return Ok(());
    }
    if let Command::Selftest = cli.command {
        let failed = selftest::run();
        return if failed == 0 { Ok(()) } else { Err(CliError::Numerical(format!("{failed} self-checks failed"))) };
    }

    let cfg = load_config(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    run::prepare_out(&cfg)?;
    match cli.command {
        Command::Convergence => run::convergence(&cfg),
        Command::Interpolate => run::interpolate(&cfg),
        Command::Probability => run::probability(&cfg),
        Command::Plot { .. } | Command::Selftest => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
