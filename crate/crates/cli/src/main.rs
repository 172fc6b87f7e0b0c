mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use ruepi::interval::PiMethod;
use ruepi::Error;

/// Uncertainty-conditioned prediction intervals for time-series forecasts.
#[derive(Parser)]
#[command(name = "ruepi", version, about)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Run a single seed, overriding the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Miscoverage level in (0, 1).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Comma-separated subset of split_cp,normalized_cp,copula,knn.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// KNN neighbour count override.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and persist the windowed dataset for every seed.
    Preprocess,
    /// Train forecaster then decoder; writes model.json per seed.
    Train,
    /// Calibrate the requested methods and write intervals_<method>.csv.
    Intervals,
    /// Score persisted intervals; writes report.csv / report.json per seed.
    Evaluate,
    /// Aggregate per-seed reports into mean +- std.
    Report,
    /// Evaluate KNN across a ladder of k values (first seed only).
    SweepK {
        /// Comma-separated k values; defaults to 5,10,20,40,80.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
    },
}

fn run(cli: &Cli) -> ruepi::Result<()> {
    let methods = cli
        .methods
        .as_ref()
        .map(|names| {
            names
                .iter()
                .map(|n| PiMethod::parse(n))
                .collect::<ruepi::Result<Vec<_>>>()
        })
        .transpose()?;
    let overrides = Overrides {
        seed: cli.seed,
        alpha: cli.alpha,
        methods,
        k: cli.k,
        out: cli.out.clone(),
    };
    let cfg = RunConfig::load(&cli.config, &overrides)?;
    match &cli.command {
        Command::Preprocess => {
            for &seed in &cfg.seeds {
                pipeline::cmd_preprocess(&cfg, seed)?;
            }
        }
        Command::Train => {
            for &seed in &cfg.seeds {
                pipeline::cmd_train(&cfg, seed)?;
            }
        }
        Command::Intervals => {
            for &seed in &cfg.seeds {
                pipeline::cmd_intervals(&cfg, seed)?;
            }
        }
        Command::Evaluate => {
            for &seed in &cfg.seeds {
                pipeline::cmd_evaluate(&cfg, seed)?;
            }
        }
        Command::Report => pipeline::cmd_report(&cfg)?,
        Command::SweepK { ks } => {
            let ladder = ks.clone().unwrap_or_else(|| vec![5, 10, 20, 40, 80]);
            let seed = cfg.seeds[0];
            pipeline::cmd_sweep_k(&cfg, seed, &ladder)?;
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. }
        | Error::Schema(_)
        | Error::InsufficientData(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 3,
        Error::Numeric(_) | Error::Dimension(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
