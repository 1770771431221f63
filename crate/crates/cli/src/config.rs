//! Layered configuration: built-in defaults < TOML file < `CROWDWALK_*`
//! environment < command-line flags.
//!
//! Flags and their environment variables are declared together in
//! [`crate::args`] (clap reads both), so by the time values reach this module
//! each one is either "set on the command line or in the environment" or
//! absent. Absent values fall back to the file, then to the defaults here.
//!
//! ```toml
//! seed = 7
//! workers = 4
//! out = "runs/walker-7"
//!
//! [evolve]
//! optimizer = "ga"          # or "de"
//! generations = 150
//! population = 64
//! skeleton = "walker.json"  # omit for the built-in walker
//! hidden = [30, 30, 30]
//! max_steps = 600
//! init_scale = 1.0
//! noise = "standard"        # or "chaotic"
//! tournament_size = 3
//! crossover_rate = 0.75
//! mutation_rate = 0.02
//! mutation_sigma = 0.1
//! elite_count = 2
//! differential_weight = 0.5
//! crossover_probability = 0.9
//! rating_bonus = 0.0
//! seed_count = 4
//!
//! [service]
//! url = "http://127.0.0.1:8080"
//! bind = "127.0.0.1:8080"
//! store = "gallery"
//! threshold = 0.5
//! page_size = 50
//! ```
//!
//! Relative paths in the file are resolved against the current directory.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_URL: &str = "http://127.0.0.1:8080";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_GENERATIONS: u64 = 150;
pub const DEFAULT_SEED_COUNT: usize = 4;

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub evolve: EvolveFile,
    #[serde(default)]
    pub service: ServiceFile,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveFile {
    pub optimizer: Option<String>,
    pub generations: Option<u64>,
    pub population: Option<usize>,
    pub skeleton: Option<PathBuf>,
    pub hidden: Option<Vec<usize>>,
    pub max_steps: Option<usize>,
    pub init_scale: Option<f64>,
    pub noise: Option<String>,
    pub tournament_size: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub mutation_sigma: Option<f64>,
    pub elite_count: Option<usize>,
    pub differential_weight: Option<f64>,
    pub crossover_probability: Option<f64>,
    pub rating_bonus: Option<f64>,
    pub seed_count: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceFile {
    pub url: Option<String>,
    pub bind: Option<SocketAddr>,
    pub store: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub page_size: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config {}: {e}", origin.display())))
    }

    /// Reads `path` if given; no file means every value comes from elsewhere.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text, p)
            }
        }
    }
}

/// The first layer that has a value.
pub fn pick<T>(flag_or_env: Option<T>, file: Option<T>) -> Option<T> {
    flag_or_env.or(file)
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
