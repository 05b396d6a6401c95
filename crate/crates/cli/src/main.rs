use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod manifest;

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pgmcast", version, about = "Grid-month hurdle forecasting pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic panel CSV.
    Gen(commands::GenArgs),
    /// Random-search hyperparameters per stage and timestep.
    Tune(commands::TuneArgs),
    /// Train one hurdle model per timestep (global or per cluster).
    Train(commands::TrainArgs),
    /// Predict a twelve-month window from trained models.
    Predict(commands::PredictArgs),
    /// Write benchmark forecasts for a window.
    Benchmark(commands::BenchmarkArgs),
    /// Cluster violent cells and assign every cell to a cluster.
    Cluster(commands::ClusterArgs),
    /// Choose global or local components per cluster from earlier windows.
    Select(commands::SelectArgs),
    /// Score forecasts against the panel.
    Score(commands::ScoreArgs),
    /// Rank models per country and window.
    Rank(commands::RankArgs),
    /// Run the CRPS informativeness simulation.
    Simulate(commands::SimulateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Tune(_) => "tune",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Benchmark(_) => "benchmark",
            Command::Cluster(_) => "cluster",
            Command::Select(_) => "select",
            Command::Score(_) => "score",
            Command::Rank(_) => "rank",
            Command::Simulate(_) => "simulate",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        cfg.seed = Some(seed);
    }
    if let Some(seed) = cfg.seed {
        cfg.synthetic.seed = seed;
        cfg.tuning.seed = seed;
        cfg.simulation.seed = seed;
    }
    let threads = cli.global.threads.or(cfg.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out_dir = cli
        .global
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let mut ctx = commands::Ctx {
        cfg,
        out_dir,
        config_path: cli.global.config.clone(),
        args: std::env::args().skip(1).collect(),
    };
    let name = cli.command.name();
    let outcome = commands::dispatch(&mut ctx, cli.command)?;
    ctx.write_manifest(name, outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = match e.category() {
                pgm_forecast::ErrorCategory::Config => "configuration",
                pgm_forecast::ErrorCategory::Validation => "validation",
                pgm_forecast::ErrorCategory::Runtime => "runtime",
            };
            eprintln!("error [{category}]: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
