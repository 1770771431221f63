use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::de::{de_step, DEParams};
use super::ga::{ga_step, GAParams};
use super::noise::{derive_seed, NoiseKind};
use super::objective::Objective;
use super::population::{init_population, Evaluator, Population};
use super::EvolveError;
use crate::controller::{Genome, GenomeId};
use crate::serde_ext;

const STREAM_INIT: u64 = 0x1817;
const STREAM_STEP: u64 = 0x57E9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Ga(GAParams),
    De(DEParams),
}

impl OptimizerConfig {
    pub fn population_size(&self) -> usize {
        match self {
            OptimizerConfig::Ga(p) => p.population_size,
            OptimizerConfig::De(p) => p.population_size,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            OptimizerConfig::Ga(_) => "ga",
            OptimizerConfig::De(_) => "de",
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        match self {
            OptimizerConfig::Ga(p) => p.validate(),
            OptimizerConfig::De(p) => p.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub optimizer: OptimizerConfig,
    pub master_seed: u64,
    pub generations: u64,
    /// Initial weights are uniform in `[-init_scale, init_scale]`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    /// Weight of the additive `mean_rating` bonus for crowd-seeded genomes. Off by default.
    #[serde(default)]
    pub rating_bonus: f64,
}

fn default_init_scale() -> f64 {
    1.0
}

impl RunConfig {
    pub fn new(optimizer: OptimizerConfig, master_seed: u64, generations: u64) -> Self {
        Self {
            optimizer,
            master_seed,
            generations,
            init_scale: default_init_scale(),
            noise: NoiseKind::default(),
            rating_bonus: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        self.optimizer.validate()?;
        if self.generations == 0 {
            return Err(EvolveError::InvalidParam("generations must be >= 1".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(EvolveError::InvalidParam(format!(
                "init_scale must be >= 0, got {}",
                self.init_scale
            )));
        }
        if !self.rating_bonus.is_finite() {
            return Err(EvolveError::InvalidParam("rating_bonus must be finite".into()));
        }
        Ok(())
    }
}

/// A crowd-approved genome injected into the initial population.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingSeed {
    pub genome: Genome,
    pub mean_rating: f64,
}

/// One line of the run history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationStats {
    pub generation: u64,
    /// Best-ever fitness so far.
    #[serde(with = "serde_ext::fitness")]
    pub best: f64,
    /// Mean over members with finite fitness.
    #[serde(with = "serde_ext::fitness")]
    pub mean: f64,
    /// Population standard deviation over members with finite fitness.
    #[serde(with = "serde_ext::fitness")]
    pub std: f64,
    /// Members whose rollout diverged.
    pub diverged: usize,
}

impl GenerationStats {
    pub fn of(pop: &Population) -> Self {
        let finite: Vec<f64> = pop
            .members
            .iter()
            .filter_map(|m| m.fitness)
            .filter(|f| f.is_finite())
            .collect();
        let (mean, std) = if finite.is_empty() {
            (f64::NEG_INFINITY, 0.0)
        } else {
            let n = finite.len() as f64;
            let mean = finite.iter().sum::<f64>() / n;
            let var = finite.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        Self {
            generation: pop.generation,
            best: pop
                .best_ever
                .as_ref()
                .and_then(|g| g.fitness)
                .unwrap_or(f64::NEG_INFINITY),
            mean,
            std,
            diverged: pop.len() - finite.len(),
        }
    }

    pub fn to_log_line(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

/// Parses a history log: one JSON record per non-empty line.
pub fn parse_history(text: &str) -> Result<Vec<GenerationStats>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub population: Population,
    /// Initial population (generation 0) followed by one record per step.
    pub history: Vec<GenerationStats>,
    pub wall_times: Vec<Duration>,
    pub best: Genome,
    /// Ids of crowd-seeded members in the initial population.
    pub seeded: Vec<GenomeId>,
}

/// Random initial population with `seeds` written over members `0..k`.
///
/// Seeds whose topology or length does not match are skipped with a warning.
pub fn seeded_population<O: Objective + ?Sized>(
    cfg: &RunConfig,
    objective: &O,
    seeds: &[RatingSeed],
) -> (Population, HashMap<GenomeId, f64>) {
    let mut noise = cfg.noise.source(derive_seed(cfg.master_seed, &[STREAM_INIT]));
    let mut pop = init_population(
        cfg.optimizer.population_size(),
        objective.topology(),
        cfg.init_scale,
        &mut noise,
        cfg.master_seed,
    );
    let mut ratings = HashMap::new();
    let mut slot = 0;
    for seed in seeds {
        if slot >= pop.len() {
            tracing::warn!("more rating seeds than population slots; ignoring the rest");
            break;
        }
        if &seed.genome.topology != objective.topology() || seed.genome.validate().is_err() {
            tracing::warn!(
                genome = %seed.genome.id,
                "skipping rating seed: topology {:?} does not match {:?}",
                seed.genome.topology.layer_sizes(),
                objective.topology().layer_sizes()
            );
            continue;
        }
        let member = &mut pop.members[slot];
        member.weights = seed.genome.weights.clone();
        ratings.insert(member.id, seed.mean_rating);
        slot += 1;
    }
    (pop, ratings)
}

/// Evaluate the seeded initial population, then run `generations` optimizer steps.
///
/// `on_generation` sees every history record as soon as it exists.
pub fn run<O: Objective + ?Sized>(
    cfg: &RunConfig,
    objective: &O,
    evaluator: &Evaluator,
    seeds: &[RatingSeed],
    mut on_generation: impl FnMut(&GenerationStats, Duration),
) -> Result<RunOutcome, EvolveError> {
    cfg.validate()?;
    let started = Instant::now();
    let (mut pop, ratings) = seeded_population(cfg, objective, seeds);
    evaluator.evaluate(objective, &mut pop.members);
    if cfg.rating_bonus != 0.0 {
        for member in &mut pop.members {
            if let (Some(rating), Some(f)) = (ratings.get(&member.id), member.fitness.as_mut()) {
                *f += cfg.rating_bonus * rating;
            }
        }
    }
    pop.update_best_ever();

    let mut history = Vec::with_capacity(cfg.generations as usize + 1);
    let mut wall_times = Vec::with_capacity(cfg.generations as usize + 1);
    let mut record = |pop: &Population, started: Instant| {
        let stats = GenerationStats::of(pop);
        let elapsed = started.elapsed();
        on_generation(&stats, elapsed);
        history.push(stats);
        wall_times.push(elapsed);
    };
    record(&pop, started);

    for generation in 1..=cfg.generations {
        let started = Instant::now();
        let mut noise = cfg
            .noise
            .source(derive_seed(cfg.master_seed, &[STREAM_STEP, generation]));
        pop = match &cfg.optimizer {
            OptimizerConfig::Ga(params) => ga_step(&pop, params, objective, evaluator, &mut noise)?,
            OptimizerConfig::De(params) => de_step(&pop, params, objective, evaluator, &mut noise)?,
        };
        record(&pop, started);
    }

    let best = pop.best_ever.clone().expect("evaluated population has a best");
    Ok(RunOutcome {
        population: pop,
        history,
        wall_times,
        best,
        seeded: ratings.keys().copied().collect(),
    })
}
