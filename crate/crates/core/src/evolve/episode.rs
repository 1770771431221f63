use serde::{Deserialize, Serialize};

use super::EvolveError;
use crate::controller::{outputs_to_torques, Controller, FeatureSpec, Genome, NetworkTopology};
use crate::math::Vec2;
use crate::sim::{
    AnimationTrace, SimError, SkeletonSpec, WorldState, DEFAULT_DT, DEFAULT_EPISODE_STEPS,
    EARTH_GRAVITY,
};

/// Mechanistic objectives computed from a recorded trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitnessKind {
    /// Pelvis displacement along +x between the first and last frame.
    #[default]
    WalkRight,
}

impl FitnessKind {
    pub fn score(&self, trace: &AnimationTrace, spec: &SkeletonSpec) -> f64 {
        match self {
            FitnessKind::WalkRight => fitness_walk_right(trace, spec),
        }
    }
}

/// Pelvis x at the last frame minus pelvis x at the first. Early
/// termination truncates the trace, so a fall caps the reward where it happened.
pub fn fitness_walk_right(trace: &AnimationTrace, spec: &SkeletonSpec) -> f64 {
    let pelvis = spec.pelvis_index();
    match (trace.frames.first(), trace.frames.last()) {
        (Some(first), Some(last)) => last[pelvis].position.x - first[pelvis].position.x,
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub skeleton: SkeletonSpec,
    pub dt: f64,
    pub max_steps: usize,
    #[serde(default)]
    pub fitness: FitnessKind,
    /// The episode ends at the first step where the pelvis center drops below this.
    pub pelvis_min_height: f64,
    #[serde(default = "default_gravity")]
    pub gravity: Vec2,
}

fn default_gravity() -> Vec2 {
    EARTH_GRAVITY
}

impl EpisodeConfig {
    /// 60 Hz, 600 steps, walk-right fitness, termination at half the initial pelvis height.
    pub fn new(skeleton: SkeletonSpec) -> Self {
        let pelvis_min_height = 0.5 * skeleton.initial_pelvis_height;
        Self {
            skeleton,
            dt: DEFAULT_DT,
            max_steps: DEFAULT_EPISODE_STEPS,
            fitness: FitnessKind::WalkRight,
            pelvis_min_height,
            gravity: EARTH_GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        self.skeleton.validate().map_err(SimError::from)?;
        if self.max_steps == 0 {
            return Err(EvolveError::InvalidParam("max_steps must be > 0".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(EvolveError::InvalidParam(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.pelvis_min_height < self.skeleton.initial_pelvis_height) {
            return Err(EvolveError::InvalidParam(format!(
                "pelvis_min_height {} must be below the initial pelvis height {}",
                self.pelvis_min_height, self.skeleton.initial_pelvis_height
            )));
        }
        if !self.gravity.is_finite() {
            return Err(EvolveError::InvalidParam("gravity must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// `-inf` when the simulation diverged.
    pub fitness: f64,
    pub trace: AnimationTrace,
    pub diverged: bool,
}

/// Rolls out one episode of `weights` controlling the configured skeleton.
///
/// Each step: sense, forward pass, torque mapping, physics step, record.
/// Pure in `(topology, weights, cfg)`.
pub fn rollout(
    topology: &NetworkTopology,
    weights: &[f64],
    cfg: &EpisodeConfig,
) -> Result<Evaluation, EvolveError> {
    topology.check_skeleton(&cfg.skeleton)?;
    let mut controller = Controller::new(topology, weights)?;
    let features = FeatureSpec::for_skeleton(&cfg.skeleton);
    let pelvis = features.pelvis_index;

    let mut world = WorldState::instantiate(&cfg.skeleton, cfg.gravity)?;
    let mut trace = AnimationTrace::new(cfg.skeleton.name.clone(), cfg.dt);
    trace.frames.reserve(cfg.max_steps + 1);
    trace.record_frame(&world);

    let mut inputs = Vec::with_capacity(features.feature_count());
    for _ in 0..cfg.max_steps {
        features.extract_into(&world, cfg.max_steps, &mut inputs);
        let activations = controller.forward(&inputs)?;
        let torques = outputs_to_torques(activations, &world.joints);
        world.set_joint_torques(&torques)?;
        match world.step_in_place(cfg.dt) {
            Ok(()) => {}
            Err(SimError::Diverged { .. }) => {
                trace.terminate();
                return Ok(Evaluation { fitness: f64::NEG_INFINITY, trace, diverged: true });
            }
            Err(e) => return Err(e.into()),
        }
        trace.record_frame(&world);
        if world.bodies[pelvis].position.y < cfg.pelvis_min_height {
            trace.terminate();
            break;
        }
    }

    let fitness = cfg.fitness.score(&trace, &cfg.skeleton);
    Ok(Evaluation { fitness, trace, diverged: false })
}

pub fn evaluate(genome: &Genome, cfg: &EpisodeConfig) -> Result<Evaluation, EvolveError> {
    rollout(&genome.topology, &genome.weights, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{GenomeId, DEFAULT_HIDDEN};
    use crate::sim::Pose;

    fn walker_cfg() -> EpisodeConfig {
        EpisodeConfig::new(SkeletonSpec::walker())
    }

    fn synthetic_trace(pelvis_x: &[f64]) -> AnimationTrace {
        let mut t = AnimationTrace::new("walker", 1.0 / 60.0);
        for &x in pelvis_x {
            let mut frame = vec![Pose { position: Vec2::new(0.0, 0.5), angle: 0.0 }; 5];
            frame[0].position = Vec2::new(x, 1.0);
            t.frames.push(frame);
        }
        t
    }

    #[test]
    fn stationary_trace_scores_zero() {
        let spec = SkeletonSpec::walker();
        assert_eq!(fitness_walk_right(&synthetic_trace(&[0.3; 10]), &spec), 0.0);
    }

    #[test]
    fn displacement_is_last_minus_first() {
        let spec = SkeletonSpec::walker();
        let t = synthetic_trace(&[0.0, 1.0, 2.0, 2.5]);
        assert_eq!(fitness_walk_right(&t, &spec), 2.5);
    }

    #[test]
    fn truncated_trace_scores_at_the_fall() {
        let spec = SkeletonSpec::walker();
        // would have reached 3.0, but fell at frame 2 with pelvis x = 1.2
        let mut t = synthetic_trace(&[0.0, 0.7, 1.2, 3.0]);
        t.frames.truncate(3);
        t.terminate();
        assert_eq!(t.termination_frame, Some(2));
        assert_eq!(fitness_walk_right(&t, &spec), 1.2);
    }

    #[test]
    fn passive_walker_collapses() {
        let cfg = walker_cfg();
        let topology = NetworkTopology::for_skeleton(&cfg.skeleton, &DEFAULT_HIDDEN).unwrap();
        let genome = Genome::zeros(GenomeId(0), topology);
        let eval = evaluate(&genome, &cfg).unwrap();
        assert!(eval.trace.terminated_early);
        assert!(!eval.diverged);
        assert!(eval.fitness.abs() < 0.5, "fitness {}", eval.fitness);
        assert_eq!(eval.trace.termination_frame, Some(eval.trace.len() - 1));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let cfg = walker_cfg();
        let topology = NetworkTopology::for_skeleton(&cfg.skeleton, &DEFAULT_HIDDEN).unwrap();
        let weights: Vec<f64> = (0..topology.genome_length())
            .map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0)
            .collect();
        let genome = Genome::new(GenomeId(1), topology, weights).unwrap();
        let a = evaluate(&genome, &cfg).unwrap();
        let b = evaluate(&genome, &cfg).unwrap();
        assert_eq!(a.fitness.to_bits(), b.fitness.to_bits());
        assert_eq!(a.trace.first_divergence(&b.trace), None);
    }

    #[test]
    fn mismatched_topology_is_an_error() {
        let cfg = walker_cfg();
        let genome = Genome::zeros(GenomeId(0), NetworkTopology::new(vec![5, 4]).unwrap());
        assert!(matches!(evaluate(&genome, &cfg), Err(EvolveError::Controller(_))));
    }

    #[test]
    fn config_rejects_high_termination_threshold() {
        let mut cfg = walker_cfg();
        cfg.pelvis_min_height = 2.0;
        assert!(cfg.validate().is_err());
        cfg.pelvis_min_height = 0.5;
        cfg.max_steps = 0;
        assert!(cfg.validate().is_err());
    }
}
