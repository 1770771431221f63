//! Population-based training of controller genomes.

pub mod de;
pub mod episode;
pub mod ga;
pub mod noise;
pub mod objective;
pub mod population;
pub mod run;

use thiserror::Error;

use crate::controller::ControllerError;
use crate::sim::SimError;

pub use de::{de_step, DEParams, DEStrategy};
pub use episode::{evaluate, fitness_walk_right, rollout, EpisodeConfig, Evaluation, FitnessKind};
pub use ga::{ga_step, GAParams};
pub use noise::{ChaoticLogistic, Noise, NoiseKind, NoiseSource, StandardNoise};
pub use objective::{EpisodeObjective, Objective, Sphere};
pub use population::{init_population, Evaluator, Population};
pub use run::{parse_history, run, GenerationStats, OptimizerConfig, RatingSeed, RunConfig, RunOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum EvolveError {
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("member {index} has not been evaluated")]
    Unevaluated { index: usize },
    #[error("population must be ≥ {min}, got {size}")]
    PopulationTooSmall { size: usize, min: usize },
    #[error("{0}")]
    InvalidParam(String),
}
