//! Deterministic 2D rigid-body dynamics for articulated box skeletons.

mod skeleton;
mod solver;
mod trace;
mod world;

use thiserror::Error;

pub use skeleton::{BodyDesc, JointDesc, SkeletonError, SkeletonSpec};
pub use trace::{AnimationTrace, Pose, TraceError, TRACE_SCHEMA_VERSION};
pub use world::{RevoluteJoint, RigidBody, SolverSettings, WorldState, EARTH_GRAVITY};

/// Default fixed timestep: 60 Hz.
pub const DEFAULT_DT: f64 = 1.0 / 60.0;
/// Default episode length: 10 s at 60 Hz.
pub const DEFAULT_EPISODE_STEPS: usize = 600;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("expected {expected} joint torques, got {got}")]
    TorqueCount { expected: usize, got: usize },
    #[error("timestep must be finite and positive, got {dt}")]
    InvalidTimestep { dt: f64 },
    #[error("timestep {got} differs from the episode's fixed timestep {expected}")]
    TimestepMismatch { expected: f64, got: f64 },
    #[error("simulation diverged at step {step_index}")]
    Diverged { step_index: u64 },
}
