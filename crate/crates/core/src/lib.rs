//! Evolving neural controllers for physics-simulated skeletons, with a
//! crowd-rating gallery that feeds human judgments back into the search.
//!
//! - [`sim`]: deterministic 2D rigid-body dynamics and animation traces.
//! - [`controller`]: feedforward networks mapping body state to joint torques.
//! - [`evolve`]: rollouts, fitness, genetic and differential-evolution steps.
//! - [`gallery`]: solution persistence and rating aggregation.

pub mod controller;
pub mod evolve;
pub mod gallery;
pub mod math;
pub mod serde_ext;
pub mod sim;

pub use controller::{FeatureSpec, Genome, GenomeId, NetworkTopology};
pub use math::Vec2;
pub use sim::{AnimationTrace, SkeletonSpec, WorldState};
