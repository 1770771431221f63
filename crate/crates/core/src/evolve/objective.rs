use super::episode::{rollout, EpisodeConfig};
use super::EvolveError;
use crate::controller::NetworkTopology;

/// Maximized by the optimizers. Implementations must be pure: the same
/// weights always score the same, on any thread.
pub trait Objective: Sync {
    fn topology(&self) -> &NetworkTopology;

    fn evaluate(&self, weights: &[f64]) -> f64;

    fn genome_len(&self) -> usize {
        self.topology().genome_length()
    }
}

/// Walker rollouts scored by the episode's fitness function; divergence scores `-inf`.
#[derive(Clone, Debug)]
pub struct EpisodeObjective {
    pub cfg: EpisodeConfig,
    topology: NetworkTopology,
}

impl EpisodeObjective {
    pub fn new(cfg: EpisodeConfig, topology: NetworkTopology) -> Result<Self, EvolveError> {
        cfg.validate()?;
        topology.check_skeleton(&cfg.skeleton)?;
        Ok(Self { cfg, topology })
    }
}

impl Objective for EpisodeObjective {
    fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    fn evaluate(&self, weights: &[f64]) -> f64 {
        match rollout(&self.topology, weights, &self.cfg) {
            Ok(eval) => eval.fitness,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Negated sphere function `-sum(x^2)`, a benchmark landscape with its optimum at 0.
///
/// Genomes need a topology; a single linear unit with `dim - 1` inputs has exactly `dim` genes.
#[derive(Clone, Debug)]
pub struct Sphere {
    topology: NetworkTopology,
}

impl Sphere {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2, "sphere needs at least 2 dimensions");
        Self { topology: NetworkTopology::new(vec![dim - 1, 1]).expect("valid") }
    }
}

impl Objective for Sphere {
    fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    fn evaluate(&self, weights: &[f64]) -> f64 {
        -weights.iter().map(|w| w * w).sum::<f64>()
    }
}
