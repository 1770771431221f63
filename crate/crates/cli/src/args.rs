use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Evolve neural walking controllers, check their traces, and share them
/// with a crowd-rating gallery.
///
/// Settings resolve as: built-in defaults < --config file < CROWDWALK_*
/// environment variables < flags.
///
/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
#[derive(Debug, Parser)]
#[command(name = "crowdwalk", version)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "CROWDWALK_CONFIG")]
    pub config: Option<PathBuf>,
    /// Master seed for all randomness in a run.
    #[arg(long, global = true, env = "CROWDWALK_SEED")]
    pub seed: Option<u64>,
    /// Evaluation worker threads [default: available parallelism].
    #[arg(long, global = true, env = "CROWDWALK_WORKERS")]
    pub workers: Option<usize>,
    /// Run output directory.
    #[arg(long, global = true, env = "CROWDWALK_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an optimization and write manifest, history, best genome and trace.
    Evolve(EvolveArgs),
    /// Re-simulate a stored trace from its genome and compare every frame.
    Replay(ReplayArgs),
    /// Upload a run's best solution to the gallery service.
    Upload(UploadArgs),
    /// Print a solution's crowd score and/or a run's history summary.
    Stats(StatsArgs),
    /// Run the gallery HTTP service until Ctrl-C / SIGTERM.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Re-run exactly what a previous run's manifest describes; other run
    /// settings are ignored.
    #[arg(long, conflicts_with_all = ["optimizer", "generations", "pop", "skeleton"])]
    pub from_manifest: Option<PathBuf>,
    /// ga or de [default: ga].
    #[arg(long, env = "CROWDWALK_OPTIMIZER")]
    pub optimizer: Option<String>,
    /// Optimizer steps after the initial population [default: 150].
    #[arg(long, env = "CROWDWALK_GENERATIONS")]
    pub generations: Option<u64>,
    /// Population size [default: 64].
    #[arg(long, env = "CROWDWALK_POP")]
    pub pop: Option<usize>,
    /// Skeleton JSON file [default: built-in walker].
    #[arg(long, env = "CROWDWALK_SKELETON")]
    pub skeleton: Option<PathBuf>,
    /// Hidden layer sizes, comma separated [default: 30,30,30].
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Episode length in steps [default: 600].
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Initial weights are uniform in [-s, s] [default: 1].
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// standard or chaotic [default: standard].
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub tournament_size: Option<usize>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub mutation_sigma: Option<f64>,
    #[arg(long)]
    pub elite_count: Option<usize>,
    /// DE differential weight F.
    #[arg(long)]
    pub differential_weight: Option<f64>,
    /// DE crossover probability CR.
    #[arg(long)]
    pub crossover_probability: Option<f64>,
    /// Seed the initial population with the service's top-rated genomes.
    #[arg(long)]
    pub seed_from_gallery: bool,
    /// How many gallery genomes to fetch with --seed-from-gallery [default: 4].
    #[arg(long)]
    pub seed_count: Option<usize>,
    /// Fitness bonus per unit of mean rating for gallery-seeded genomes [default: 0].
    #[arg(long)]
    pub rating_bonus: Option<f64>,
    /// Service base URL for --seed-from-gallery.
    #[arg(long, env = "CROWDWALK_URL")]
    pub url: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A run directory, or a gallery solution directory (record.json + trace.json).
    /// Defaults to --out.
    pub path: Option<PathBuf>,
    /// Trace to check instead of the one in PATH.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UploadArgs {
    /// Run directory to upload from. Defaults to --out.
    pub path: Option<PathBuf>,
    /// Solution id [default: random].
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, env = "CROWDWALK_URL")]
    pub url: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Gallery solution to report on.
    #[arg(long)]
    pub id: Option<String>,
    /// Run directory whose history to summarize.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long, env = "CROWDWALK_URL")]
    pub url: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address [default: 127.0.0.1:8080].
    #[arg(long, env = "CROWDWALK_BIND")]
    pub bind: Option<SocketAddr>,
    /// Gallery directory; created if missing [default: ./gallery].
    #[arg(long, env = "CROWDWALK_STORE")]
    pub store: Option<PathBuf>,
    /// Minimum mean rating for a solution to count as good [default: 0.5].
    #[arg(long, env = "CROWDWALK_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Solutions per listing page [default: 50].
    #[arg(long, env = "CROWDWALK_PAGE_SIZE")]
    pub page_size: Option<usize>,
}
