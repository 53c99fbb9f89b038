//! `hrspike`: simulate heart-rate corpora, detect spikes, tune and compare
//! detectors, and run per-athlete Poisson inference.
//!
//! Exit codes: 0 success, 1 data error, 2 usage or configuration error.

mod commands;
mod config;
mod corpus;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0:#}")]
    Data(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hrspike",
    version,
    about = "Heart-rate spike simulation, detection, scoring and inference"
)]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// 45 activities.
    Training,
    /// 900 activities.
    Test,
}

impl Preset {
    pub fn count(self) -> usize {
        match self {
            Self::Training => 45,
            Self::Test => 900,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a simulated corpus: one CSV and truth JSON per activity.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Number of activities (overrides the preset).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Use one scenario for every activity instead of cycling through all.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Detect spikes in every CSV of a directory.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        method: Option<String>,
        /// Take the method's parameters from a tuning log.
        #[arg(long)]
        tuning: Option<PathBuf>,
    },
    /// Grid-search detector parameters on a training corpus.
    Tune {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated methods (default: all).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Score detections against ground truth and write the comparison table.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        /// Directories of detections, one per method.
        #[arg(long)]
        detected: Vec<PathBuf>,
        /// Detect in-process with every method's tuned parameters instead.
        #[arg(long, conflicts_with = "detected")]
        tuning: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-athlete rates, likelihood-ratio tests and cohort statistics.
    Infer {
        /// Athlete manifest JSON.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let config = config::Config::load(cli.config.as_deref())?;
    let ctx = commands::Context {
        seed: cli.seed,
        config,
    };
    match cli.command {
        Command::Simulate {
            out,
            count,
            preset,
            scenario,
        } => {
            let count = count.or(preset.map(Preset::count)).unwrap_or(1);
            commands::simulate(&ctx, &out, count, scenario.as_deref())
        }
        Command::Detect {
            input,
            out,
            method,
            tuning,
        } => commands::detect(&ctx, &input, &out, method.as_deref(), tuning.as_deref()),
        Command::Tune {
            train,
            out,
            methods,
        } => commands::tune(&ctx, &train, &out, &methods),
        Command::Evaluate {
            truth,
            detected,
            tuning,
            out,
        } => commands::evaluate(&ctx, &truth, &detected, tuning.as_deref(), &out),
        Command::Infer { manifest, out } => commands::infer(&ctx, &manifest, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
