use serde::{Deserialize, Serialize};

use super::noise::NoiseSource;
use super::objective::Objective;
use super::population::{rank_order, Evaluator, Population};
use super::EvolveError;
use crate::controller::Genome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GAParams {
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub elite_count: usize,
}

impl Default for GAParams {
    fn default() -> Self {
        Self {
            population_size: 64,
            tournament_size: 3,
            crossover_rate: 0.75,
            mutation_rate: 0.02,
            mutation_sigma: 0.1,
            elite_count: 2,
        }
    }
}

impl GAParams {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |msg: String| Err(EvolveError::InvalidParam(msg));
        if self.population_size < 2 {
            return bad(format!("population must be ≥ 2, got {}", self.population_size));
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1".into());
        }
        for (name, p) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return bad(format!("mutation_sigma must be >= 0, got {}", self.mutation_sigma));
        }
        if self.elite_count == 0 || self.elite_count >= self.population_size {
            return bad(format!(
                "elite_count must be in [1, population), got {}",
                self.elite_count
            ));
        }
        Ok(())
    }
}

/// Draws `size` members with replacement and returns the index of the best.
pub fn tournament(pop: &Population, size: usize, noise: &mut dyn NoiseSource) -> usize {
    let mut winner = noise.index(pop.len());
    for _ in 1..size {
        let challenger = noise.index(pop.len());
        if rank_order(&pop.members[challenger], &pop.members[winner]).is_lt() {
            winner = challenger;
        }
    }
    winner
}

/// Builds the offspring genes without evaluating them.
///
/// Noise is consumed in a fixed order per child: both tournaments, the
/// crossover draw, one draw per gene if crossing over, then one draw per gene
/// for mutation plus two more for each mutated gene's Gaussian.
pub fn breed(
    pop: &Population,
    params: &GAParams,
    noise: &mut dyn NoiseSource,
) -> Result<Population, EvolveError> {
    params.validate()?;
    pop.require_evaluated()?;
    if pop.len() != params.population_size {
        return Err(EvolveError::InvalidParam(format!(
            "population has {} members, params expect {}",
            pop.len(),
            params.population_size
        )));
    }

    let ranking = pop.ranking();
    let mut next = Population {
        members: Vec::with_capacity(pop.len()),
        generation: pop.generation + 1,
        best_ever: pop.best_ever.clone(),
        master_seed: pop.master_seed,
        next_id: pop.next_id,
    };
    for &i in &ranking[..params.elite_count] {
        next.members.push(pop.members[i].clone());
    }

    while next.members.len() < pop.len() {
        let first = &pop.members[tournament(pop, params.tournament_size, noise)];
        let second = &pop.members[tournament(pop, params.tournament_size, noise)];
        let mut weights = if noise.next_uniform() < params.crossover_rate {
            first
                .weights
                .iter()
                .zip(&second.weights)
                .map(|(&a, &b)| if noise.next_uniform() < 0.5 { a } else { b })
                .collect()
        } else {
            first.weights.clone()
        };
        for w in &mut weights {
            if noise.next_uniform() < params.mutation_rate {
                *w += params.mutation_sigma * noise.gaussian();
            }
        }
        let id = next.fresh_id();
        next.members.push(Genome {
            id,
            topology: first.topology.clone(),
            weights,
            fitness: None,
        });
    }
    Ok(next)
}

/// One generation: elites copied unchanged, the rest bred by tournament
/// selection, uniform crossover and Gaussian mutation, then evaluated.
pub fn ga_step<O: Objective + ?Sized>(
    pop: &Population,
    params: &GAParams,
    objective: &O,
    evaluator: &Evaluator,
    noise: &mut dyn NoiseSource,
) -> Result<Population, EvolveError> {
    let mut next = breed(pop, params, noise)?;
    evaluator.evaluate(objective, &mut next.members);
    next.update_best_ever();
    Ok(next)
}
