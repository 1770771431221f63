//! Fixed-topology feedforward controllers.
//!
//! A genome is the flat weight vector of a fully connected network. Layer by
//! layer, each output neuron owns `n_in` consecutive weights followed by its
//! bias, so a layer pair contributes `(n_in + 1) * n_out` genes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::serde_ext;
use crate::sim::{RevoluteJoint, SkeletonError, SkeletonSpec, WorldState};

/// Hidden layers of the default walker network.
pub const DEFAULT_HIDDEN: [usize; 3] = [30, 30, 30];

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("topology needs at least 2 layers, got {0}")]
    TooFewLayers(usize),
    #[error("layer {0} has size zero")]
    EmptyLayer(usize),
    #[error("genome has {got} weights, topology {topology:?} needs {expected}")]
    GenomeLength { topology: Vec<usize>, expected: usize, got: usize },
    #[error("weight {0} is not finite")]
    NonFiniteWeight(usize),
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("topology {topology:?} does not fit skeleton: needs {inputs} inputs and {outputs} outputs")]
    SkeletonMismatch { topology: Vec<usize>, inputs: usize, outputs: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetworkTopology(Vec<usize>);

impl NetworkTopology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, ControllerError> {
        if layer_sizes.len() < 2 {
            return Err(ControllerError::TooFewLayers(layer_sizes.len()));
        }
        if let Some(i) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(ControllerError::EmptyLayer(i));
        }
        Ok(Self(layer_sizes))
    }

    /// `[inputs, hidden.., joints]` for a skeleton.
    pub fn for_skeleton(spec: &SkeletonSpec, hidden: &[usize]) -> Result<Self, ControllerError> {
        let mut sizes = vec![FeatureSpec::feature_count_for(spec.bodies.len())];
        sizes.extend_from_slice(hidden);
        sizes.push(spec.joints.len());
        Self::new(sizes)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn inputs(&self) -> usize {
        self.0[0]
    }

    pub fn outputs(&self) -> usize {
        *self.0.last().expect("validated topology")
    }

    /// Number of genes: sum of `(n_in + 1) * n_out` over consecutive layers.
    pub fn genome_length(&self) -> usize {
        self.0.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub fn check_skeleton(&self, spec: &SkeletonSpec) -> Result<(), ControllerError> {
        let inputs = FeatureSpec::feature_count_for(spec.bodies.len());
        let outputs = spec.joints.len();
        if self.inputs() != inputs || self.outputs() != outputs {
            return Err(ControllerError::SkeletonMismatch {
                topology: self.0.clone(),
                inputs,
                outputs,
            });
        }
        Ok(())
    }
}

pub fn genome_length(topology: &NetworkTopology) -> usize {
    topology.genome_length()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenomeId(pub u64);

impl std::fmt::Display for GenomeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Genome {
    pub id: GenomeId,
    pub topology: NetworkTopology,
    pub weights: Vec<f64>,
    #[serde(default, with = "serde_ext::opt_fitness", skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
}

impl Genome {
    pub fn new(id: GenomeId, topology: NetworkTopology, weights: Vec<f64>) -> Result<Self, ControllerError> {
        let genome = Self { id, topology, weights, fitness: None };
        genome.validate()?;
        Ok(genome)
    }

    pub fn zeros(id: GenomeId, topology: NetworkTopology) -> Self {
        let weights = vec![0.0; topology.genome_length()];
        Self { id, topology, weights, fitness: None }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let expected = self.topology.genome_length();
        if self.weights.len() != expected {
            return Err(ControllerError::GenomeLength {
                topology: self.topology.0.clone(),
                expected,
                got: self.weights.len(),
            });
        }
        if let Some(i) = self.weights.iter().position(|w| !w.is_finite()) {
            return Err(ControllerError::NonFiniteWeight(i));
        }
        Ok(())
    }

    /// Allocating forward pass; see [`Controller`] for the reusable form.
    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>, ControllerError> {
        let mut controller = Controller::new(&self.topology, &self.weights)?;
        Ok(controller.forward(inputs)?.to_vec())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A network bound to one weight vector, with scratch buffers for repeated passes.
#[derive(Clone, Debug)]
pub struct Controller<'w> {
    layers: &'w [usize],
    weights: &'w [f64],
    current: Vec<f64>,
    next: Vec<f64>,
}

impl<'w> Controller<'w> {
    pub fn new(topology: &'w NetworkTopology, weights: &'w [f64]) -> Result<Self, ControllerError> {
        let expected = topology.genome_length();
        if weights.len() != expected {
            return Err(ControllerError::GenomeLength {
                topology: topology.0.clone(),
                expected,
                got: weights.len(),
            });
        }
        let widest = topology.0.iter().copied().max().unwrap_or(0);
        Ok(Self {
            layers: &topology.0,
            weights,
            current: Vec::with_capacity(widest),
            next: Vec::with_capacity(widest),
        })
    }

    /// Fully connected pass with a logistic sigmoid on every non-input layer.
    pub fn forward(&mut self, inputs: &[f64]) -> Result<&[f64], ControllerError> {
        if inputs.len() != self.layers[0] {
            return Err(ControllerError::InputLength {
                expected: self.layers[0],
                got: inputs.len(),
            });
        }
        self.current.clear();
        self.current.extend_from_slice(inputs);
        let mut offset = 0;
        for pair in self.layers.windows(2) {
            let (n_in, n_out) = (pair[0], pair[1]);
            let stride = n_in + 1;
            self.next.clear();
            for neuron in self.weights[offset..offset + stride * n_out].chunks_exact(stride) {
                let (w, bias) = neuron.split_at(n_in);
                let z = w.iter().zip(&self.current).fold(bias[0], |acc, (w, x)| acc + w * x);
                self.next.push(sigmoid(z));
            }
            offset += stride * n_out;
            std::mem::swap(&mut self.current, &mut self.next);
        }
        Ok(&self.current)
    }
}

/// Per-feature `[min, max]` ranges for unit-range normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationBounds {
    /// Body height relative to the pelvis, m.
    pub height: [f64; 2],
    /// Linear velocity components, m/s.
    pub linear_velocity: [f64; 2],
    /// Angular velocity, rad/s.
    pub angular_velocity: [f64; 2],
}

impl Default for NormalizationBounds {
    fn default() -> Self {
        Self {
            height: [-2.0, 2.0],
            linear_velocity: [-10.0, 10.0],
            angular_velocity: [-20.0, 20.0],
        }
    }
}

impl NormalizationBounds {
    pub fn validate(&self) -> Result<(), SkeletonError> {
        for (feature, [lo, hi]) in [
            ("height", self.height),
            ("linear_velocity", self.linear_velocity),
            ("angular_velocity", self.angular_velocity),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SkeletonError::Bounds { feature });
            }
        }
        Ok(())
    }
}

/// Maps `value` from `[min, max]` onto `[0, 1]`, clamping. Non-finite input
/// saturates by sign; NaN maps to the midpoint.
pub fn unit_range(value: f64, [min, max]: [f64; 2]) -> f64 {
    if value.is_nan() {
        return 0.5;
    }
    ((value - min) / (max - min)).clamp(0.0, 1.0)
}

/// Sensor layout: `(height above pelvis, v_x, v_y, omega)` per body in id
/// order, then normalized episode time.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpec {
    pub body_count: usize,
    pub pelvis_index: usize,
    pub bounds: NormalizationBounds,
}

impl FeatureSpec {
    pub fn for_skeleton(spec: &SkeletonSpec) -> Self {
        Self {
            body_count: spec.bodies.len(),
            pelvis_index: spec.pelvis_index(),
            bounds: spec.normalization.clone(),
        }
    }

    pub fn feature_count_for(body_count: usize) -> usize {
        4 * body_count + 1
    }

    pub fn feature_count(&self) -> usize {
        Self::feature_count_for(self.body_count)
    }

    pub fn extract_into(&self, world: &WorldState, episode_len: usize, out: &mut Vec<f64>) {
        debug_assert_eq!(world.bodies.len(), self.body_count);
        out.clear();
        let b = &self.bounds;
        let pelvis_y = world.bodies[self.pelvis_index].position.y;
        for body in &world.bodies {
            out.push(unit_range(body.position.y - pelvis_y, b.height));
            out.push(unit_range(body.linear_velocity.x, b.linear_velocity));
            out.push(unit_range(body.linear_velocity.y, b.linear_velocity));
            out.push(unit_range(body.angular_velocity, b.angular_velocity));
        }
        let time = if episode_len == 0 {
            0.0
        } else {
            (world.step_index as f64 / episode_len as f64).clamp(0.0, 1.0)
        };
        out.push(time);
    }
}

pub fn extract_inputs(world: &WorldState, spec: &FeatureSpec, episode_len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.feature_count());
    spec.extract_into(world, episode_len, &mut out);
    out
}

/// `tau_i = (2 a_i - 1) * torque_limit_i`, so 0.5 is zero torque.
pub fn outputs_to_torques(activations: &[f64], joints: &[RevoluteJoint]) -> Vec<f64> {
    debug_assert_eq!(activations.len(), joints.len());
    activations
        .iter()
        .zip(joints)
        .map(|(&a, j)| {
            let a = if a.is_nan() { 0.5 } else { a.clamp(0.0, 1.0) };
            (2.0 * a - 1.0) * j.torque_limit
        })
        .collect()
}
