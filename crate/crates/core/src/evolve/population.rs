use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::NoiseSource;
use super::objective::Objective;
use super::EvolveError;
use crate::controller::{Genome, GenomeId, NetworkTopology};

/// NaN sorts with `-inf` as the worst possible fitness.
pub fn fitness_key(fitness: Option<f64>) -> f64 {
    match fitness {
        Some(f) if !f.is_nan() => f,
        _ => f64::NEG_INFINITY,
    }
}

/// Best-first order: higher fitness, then lower id.
pub fn rank_order(a: &Genome, b: &Genome) -> Ordering {
    fitness_key(b.fitness)
        .total_cmp(&fitness_key(a.fitness))
        .then(a.id.cmp(&b.id))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Genome>,
    pub generation: u64,
    pub best_ever: Option<Genome>,
    pub master_seed: u64,
    /// Next fresh genome id.
    pub next_id: u64,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn fresh_id(&mut self) -> GenomeId {
        let id = GenomeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn require_evaluated(&self) -> Result<(), EvolveError> {
        match self.members.iter().position(|m| m.fitness.is_none()) {
            Some(index) => Err(EvolveError::Unevaluated { index }),
            None => Ok(()),
        }
    }

    /// Member indices in best-first order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.members.len()).collect();
        order.sort_by(|&a, &b| rank_order(&self.members[a], &self.members[b]));
        order
    }

    pub fn best(&self) -> Option<&Genome> {
        self.members.iter().min_by(|a, b| rank_order(a, b))
    }

    /// Replaces `best_ever` when the current best ranks strictly ahead of it.
    pub fn update_best_ever(&mut self) {
        let Some(best) = self.best() else { return };
        let replace = match &self.best_ever {
            None => true,
            Some(prev) => fitness_key(best.fitness) > fitness_key(prev.fitness),
        };
        if replace {
            self.best_ever = Some(best.clone());
        }
    }
}

/// `size` genomes with weights uniform in `[-init_scale, init_scale]`.
pub fn init_population(
    size: usize,
    topology: &NetworkTopology,
    init_scale: f64,
    noise: &mut dyn NoiseSource,
    master_seed: u64,
) -> Population {
    let len = topology.genome_length();
    let members = (0..size)
        .map(|i| {
            let weights = (0..len)
                .map(|_| {
                    let u = noise.next_uniform();
                    if init_scale == 0.0 {
                        0.0
                    } else {
                        init_scale * (2.0 * u - 1.0)
                    }
                })
                .collect();
            Genome {
                id: GenomeId(i as u64),
                topology: topology.clone(),
                weights,
                fitness: None,
            }
        })
        .collect();
    Population {
        members,
        generation: 0,
        best_ever: None,
        master_seed,
        next_id: size as u64,
    }
}

/// Scores genomes, serially or on a fixed-size worker pool. Results are
/// written back in member order, so the schedule never affects the outcome.
pub struct Evaluator {
    pool: Option<rayon::ThreadPool>,
}

impl Evaluator {
    pub fn serial() -> Self {
        Self { pool: None }
    }

    pub fn new(workers: usize) -> Result<Self, EvolveError> {
        if workers <= 1 {
            return Ok(Self::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("eval-{i}"))
            .build()
            .map_err(|e| EvolveError::InvalidParam(format!("worker pool: {e}")))?;
        Ok(Self { pool: Some(pool) })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Fills in `fitness` for every genome that lacks one.
    pub fn evaluate<O: Objective + ?Sized>(&self, objective: &O, genomes: &mut [Genome]) {
        let pending: Vec<usize> = genomes
            .iter()
            .enumerate()
            .filter(|(_, g)| g.fitness.is_none())
            .map(|(i, _)| i)
            .collect();
        let score = |i: &usize| {
            let f = objective.evaluate(&genomes[*i].weights);
            if f.is_nan() { f64::NEG_INFINITY } else { f }
        };
        let scores: Vec<f64> = match &self.pool {
            None => pending.iter().map(score).collect(),
            Some(pool) => pool.install(|| pending.par_iter().map(score).collect()),
        };
        for (i, f) in pending.into_iter().zip(scores) {
            genomes[i].fitness = Some(f);
        }
    }
}
