use serde::{Deserialize, Serialize};

use super::noise::NoiseSource;
use super::objective::Objective;
use super::population::{fitness_key, Evaluator, Population};
use super::EvolveError;
use crate::controller::Genome;

/// rand/1/bin needs the target plus three distinct others.
pub const DE_MIN_POPULATION: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DEStrategy {
    #[default]
    #[serde(rename = "rand/1/bin")]
    Rand1Bin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DEParams {
    pub population_size: usize,
    /// Differential weight F.
    pub differential_weight: f64,
    /// Binomial crossover probability CR.
    pub crossover_probability: f64,
    #[serde(default)]
    pub strategy: DEStrategy,
}

impl Default for DEParams {
    fn default() -> Self {
        Self {
            population_size: 64,
            differential_weight: 0.5,
            crossover_probability: 0.9,
            strategy: DEStrategy::Rand1Bin,
        }
    }
}

impl DEParams {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if self.population_size < DE_MIN_POPULATION {
            return Err(EvolveError::PopulationTooSmall {
                size: self.population_size,
                min: DE_MIN_POPULATION,
            });
        }
        if !(0.0..=2.0).contains(&self.differential_weight) {
            return Err(EvolveError::InvalidParam(format!(
                "differential_weight must be in [0, 2], got {}",
                self.differential_weight
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(EvolveError::InvalidParam(format!(
                "crossover_probability must be in [0, 1], got {}",
                self.crossover_probability
            )));
        }
        Ok(())
    }
}

fn distinct_index(noise: &mut dyn NoiseSource, n: usize, taken: &[usize]) -> usize {
    loop {
        let i = noise.index(n);
        if !taken.contains(&i) {
            return i;
        }
    }
}

/// Trial vectors for every member, unevaluated, in member order.
///
/// Per member, noise is consumed as: `a`, `b`, `c` (rejection-sampled to be
/// distinct from each other and the target), the forced gene index, then one
/// crossover draw per gene.
pub fn trial_vectors(
    pop: &Population,
    params: &DEParams,
    noise: &mut dyn NoiseSource,
) -> Result<Vec<Vec<f64>>, EvolveError> {
    params.validate()?;
    pop.require_evaluated()?;
    let n = pop.len();
    if n < DE_MIN_POPULATION {
        return Err(EvolveError::PopulationTooSmall { size: n, min: DE_MIN_POPULATION });
    }
    let f = params.differential_weight;
    let cr = params.crossover_probability;

    let mut trials = Vec::with_capacity(n);
    for i in 0..n {
        let a = distinct_index(noise, n, &[i]);
        let b = distinct_index(noise, n, &[i, a]);
        let c = distinct_index(noise, n, &[i, a, b]);
        let (xa, xb, xc) = (
            &pop.members[a].weights,
            &pop.members[b].weights,
            &pop.members[c].weights,
        );
        let target = &pop.members[i].weights;
        let forced = noise.index(target.len());
        let trial = (0..target.len())
            .map(|j| {
                let take_mutant = noise.next_uniform() < cr || j == forced;
                if take_mutant {
                    xa[j] + f * (xb[j] - xc[j])
                } else {
                    target[j]
                }
            })
            .collect();
        trials.push(trial);
    }
    Ok(trials)
}

/// One generation of rand/1/bin. All trials are built from the current
/// population, evaluated, then each replaces its target iff it scores at
/// least as well (ties go to the trial).
pub fn de_step<O: Objective + ?Sized>(
    pop: &Population,
    params: &DEParams,
    objective: &O,
    evaluator: &Evaluator,
    noise: &mut dyn NoiseSource,
) -> Result<Population, EvolveError> {
    let trials = trial_vectors(pop, params, noise)?;
    let mut next = pop.clone();
    next.generation += 1;
    let mut candidates: Vec<Genome> = trials
        .into_iter()
        .zip(&pop.members)
        .map(|(weights, parent)| Genome {
            id: next.fresh_id(),
            topology: parent.topology.clone(),
            weights,
            fitness: None,
        })
        .collect();
    evaluator.evaluate(objective, &mut candidates);
    for (slot, trial) in next.members.iter_mut().zip(candidates) {
        if fitness_key(trial.fitness) >= fitness_key(slot.fitness) {
            *slot = trial;
        }
    }
    next.update_best_ever();
    Ok(next)
}
