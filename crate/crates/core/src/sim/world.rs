use serde::{Deserialize, Serialize};

use super::skeleton::SkeletonSpec;
use super::solver;
use super::SimError;
use crate::math::Vec2;

/// Standard gravity, pointing down.
pub const EARTH_GRAVITY: Vec2 = Vec2::new(0.0, -9.81);

/// Thickness of the static ground slab; its top face is the plane `y = 0`.
const GROUND_HALF_EXTENTS: Vec2 = Vec2::new(1.0e4, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidBody {
    pub id: u32,
    pub half_extents: Vec2,
    /// `f64::INFINITY` for the static ground.
    pub mass: f64,
    pub inertia: f64,
    pub inv_mass: f64,
    pub inv_inertia: f64,
    /// Center of mass.
    pub position: Vec2,
    pub angle: f64,
    pub linear_velocity: Vec2,
    pub angular_velocity: f64,
}

impl RigidBody {
    pub fn dynamic(id: u32, half_extents: Vec2, mass: f64, inertia: f64) -> Self {
        Self {
            id,
            half_extents,
            mass,
            inertia,
            inv_mass: 1.0 / mass,
            inv_inertia: 1.0 / inertia,
            position: Vec2::ZERO,
            angle: 0.0,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
        }
    }

    pub fn ground() -> Self {
        Self {
            id: u32::MAX,
            half_extents: GROUND_HALF_EXTENTS,
            mass: f64::INFINITY,
            inertia: f64::INFINITY,
            inv_mass: 0.0,
            inv_inertia: 0.0,
            position: Vec2::new(0.0, -GROUND_HALF_EXTENTS.y),
            angle: 0.0,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
        }
    }

    pub fn is_static(&self) -> bool {
        self.inv_mass == 0.0
    }

    /// Maps a point from the body frame to world space.
    pub fn world_point(&self, local: Vec2) -> Vec2 {
        self.position + local.rotate(self.angle)
    }

    /// Corners in world space, counter-clockwise from bottom-left in the body frame.
    pub fn corners(&self) -> [Vec2; 4] {
        let h = self.half_extents;
        [
            Vec2::new(-h.x, -h.y),
            Vec2::new(h.x, -h.y),
            Vec2::new(h.x, h.y),
            Vec2::new(-h.x, h.y),
        ]
        .map(|c| self.world_point(c))
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.angle.is_finite()
            && self.linear_velocity.is_finite()
            && self.angular_velocity.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevoluteJoint {
    pub id: u32,
    /// Index into [`WorldState::bodies`].
    pub body_a: usize,
    /// Index into [`WorldState::bodies`].
    pub body_b: usize,
    pub anchor_a: Vec2,
    pub anchor_b: Vec2,
    /// Bounds on `angle_b - angle_a`.
    pub angle_limits: Option<[f64; 2]>,
    pub torque_limit: f64,
    applied_torque: f64,
    /// Accumulated point-constraint impulse, carried over for warm starting.
    pub(crate) impulse: Vec2,
    /// Accumulated limit impulse: positive pushes off the lower bound,
    /// negative off the upper one.
    pub(crate) limit_impulse: f64,
}

impl RevoluteJoint {
    pub fn applied_torque(&self) -> f64 {
        self.applied_torque
    }

    /// Stores `torque` clamped to `±torque_limit`. Non-finite commands become zero.
    pub fn set_applied_torque(&mut self, torque: f64) {
        self.applied_torque = if torque.is_nan() {
            0.0
        } else {
            torque.clamp(-self.torque_limit, self.torque_limit)
        };
    }

    pub fn angle(&self, bodies: &[RigidBody]) -> f64 {
        bodies[self.body_b].angle - bodies[self.body_a].angle
    }

    /// World-space distance between the two anchor points.
    pub fn anchor_error(&self, bodies: &[RigidBody]) -> f64 {
        let pa = bodies[self.body_a].world_point(self.anchor_a);
        let pb = bodies[self.body_b].world_point(self.anchor_b);
        (pb - pa).length()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub velocity_iterations: usize,
    pub position_iterations: usize,
    /// Fraction of contact penetration removed per position iteration.
    pub baumgarte: f64,
    /// Allowed resting penetration.
    pub linear_slop: f64,
    /// Corners closer than this to the ground, plus their fall this step,
    /// generate speculative contacts.
    pub speculative_distance: f64,
    pub max_linear_correction: f64,
    pub max_angular_correction: f64,
    pub max_translation: f64,
    pub max_rotation: f64,
    /// Coulomb friction coefficient against the ground. Restitution is always zero.
    pub friction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            velocity_iterations: 8,
            position_iterations: 8,
            baumgarte: 0.2,
            linear_slop: 0.001,
            speculative_distance: 0.02,
            max_linear_correction: 0.2,
            max_angular_correction: 8.0_f64.to_radians(),
            max_translation: 2.0,
            max_rotation: 0.5 * std::f64::consts::PI,
            friction: 0.8,
        }
    }
}

/// Accumulated normal and tangent impulse of one box corner against the ground.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct CornerImpulse {
    pub normal: f64,
    pub tangent: f64,
}

/// Full dynamic state of a skeleton plus the static ground.
///
/// Stepping is a pure function of the state: the warm-start impulse cache
/// lives here, not in the solver, so cloning a world clones its future.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Dynamic bodies in ascending id order.
    pub bodies: Vec<RigidBody>,
    pub ground: RigidBody,
    /// Joints in ascending id order.
    pub joints: Vec<RevoluteJoint>,
    pub gravity: Vec2,
    pub time: f64,
    pub step_index: u64,
    /// Fixed on the first step; later steps must use the same value.
    pub dt: Option<f64>,
    pub settings: SolverSettings,
    pub(crate) contacts: Vec<[CornerImpulse; 4]>,
}

impl WorldState {
    /// Builds a world at the skeleton's initial pose, at rest.
    pub fn instantiate(spec: &SkeletonSpec, gravity: Vec2) -> Result<Self, SimError> {
        Self::with_settings(spec, gravity, SolverSettings::default())
    }

    pub fn with_settings(
        spec: &SkeletonSpec,
        gravity: Vec2,
        settings: SolverSettings,
    ) -> Result<Self, SimError> {
        spec.validate()?;
        let sorted = spec.sorted_bodies();
        let bodies: Vec<RigidBody> = sorted
            .iter()
            .map(|d| {
                let mut body = RigidBody::dynamic(d.id, d.half_extents, d.mass, d.inertia());
                body.position = d.position;
                body.angle = d.angle;
                body
            })
            .collect();
        let index_of = |id: u32| sorted.iter().position(|b| b.id == id).expect("validated");
        let joints = spec
            .sorted_joints()
            .into_iter()
            .map(|j| RevoluteJoint {
                id: j.id,
                body_a: index_of(j.body_a),
                body_b: index_of(j.body_b),
                anchor_a: j.anchor_a,
                anchor_b: j.anchor_b,
                angle_limits: j.angle_limits,
                torque_limit: j.torque_limit,
                applied_torque: 0.0,
                impulse: Vec2::ZERO,
                limit_impulse: 0.0,
            })
            .collect();
        let contacts = vec![[CornerImpulse::default(); 4]; bodies.len()];
        Ok(Self {
            bodies,
            ground: RigidBody::ground(),
            joints,
            gravity,
            time: 0.0,
            step_index: 0,
            dt: None,
            settings,
            contacts,
        })
    }

    /// Top surface of the ground.
    pub fn ground_height(&self) -> f64 {
        self.ground.position.y + self.ground.half_extents.y
    }

    /// Sets every joint's motor command, clamped to its torque limit.
    /// The torques act during the next [`step`](Self::step).
    pub fn set_joint_torques(&mut self, torques: &[f64]) -> Result<(), SimError> {
        if torques.len() != self.joints.len() {
            return Err(SimError::TorqueCount {
                expected: self.joints.len(),
                got: torques.len(),
            });
        }
        for (joint, &tau) in self.joints.iter_mut().zip(torques) {
            joint.set_applied_torque(tau);
        }
        Ok(())
    }

    /// Returns the world advanced by `dt`.
    pub fn step(&self, dt: f64) -> Result<WorldState, SimError> {
        let mut next = self.clone();
        next.step_in_place(dt)?;
        Ok(next)
    }

    /// In-place form of [`step`](Self::step). On error the state is left
    /// as computed, which may contain non-finite values.
    pub fn step_in_place(&mut self, dt: f64) -> Result<(), SimError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::InvalidTimestep { dt });
        }
        match self.dt {
            Some(fixed) if fixed != dt => {
                return Err(SimError::TimestepMismatch { expected: fixed, got: dt })
            }
            Some(_) => {}
            None => self.dt = Some(dt),
        }

        solver::advance(self, dt);

        self.step_index += 1;
        self.time = self.step_index as f64 * dt;
        if self.bodies.iter().all(RigidBody::is_finite) {
            Ok(())
        } else {
            Err(SimError::Diverged { step_index: self.step_index })
        }
    }

    /// Deepest penetration of any dynamic box corner into the ground (0 if none).
    pub fn max_penetration(&self) -> f64 {
        let top = self.ground_height();
        self.bodies
            .iter()
            .flat_map(|b| b.corners())
            .map(|c| top - c.y)
            .fold(0.0, f64::max)
    }

    /// Largest world-space anchor separation over all joints.
    pub fn max_anchor_error(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| j.anchor_error(&self.bodies))
            .fold(0.0, f64::max)
    }

    /// Kinetic plus gravitational potential energy.
    pub fn mechanical_energy(&self) -> f64 {
        self.bodies
            .iter()
            .map(|b| {
                let v = b.linear_velocity;
                0.5 * b.mass * v.dot(v) + 0.5 * b.inertia * b.angular_velocity.powi(2)
                    - b.mass * self.gravity.dot(b.position)
            })
            .sum()
    }
}
