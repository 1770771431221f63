//! Declarative skeleton descriptions.
//!
//! A skeleton file is a JSON document mirroring [`SkeletonSpec`]. All
//! quantities are SI: meters, kilograms, radians, newton-meters. Unknown
//! fields are rejected so typos never silently fall back to defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::NormalizationBounds;
use crate::math::Vec2;

/// Anchors of a jointed pair must coincide at the initial pose within this distance.
pub const INITIAL_ANCHOR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("skeleton has no bodies")]
    NoBodies,
    #[error("body {id}: duplicate body id")]
    DuplicateBody { id: u32 },
    #[error("body {id}: {field} must be finite and positive, got {value}")]
    NonPositive { id: u32, field: &'static str, value: f64 },
    #[error("body {id}: {field} must be finite")]
    NonFinite { id: u32, field: &'static str },
    #[error("joint {id}: duplicate joint id")]
    DuplicateJoint { id: u32 },
    #[error("joint {joint}: references missing body {body}")]
    DanglingBody { joint: u32, body: u32 },
    #[error("joint {joint}: connects body {body} to itself")]
    SelfJoint { joint: u32, body: u32 },
    #[error("joint {joint}: closes a cycle in the joint graph")]
    Cycle { joint: u32 },
    #[error("joint graph is disconnected: body {body} is unreachable from body {root}")]
    Disconnected { root: u32, body: u32 },
    #[error("joint {joint}: torque_limit must be finite and positive, got {value}")]
    TorqueLimit { joint: u32, value: f64 },
    #[error("joint {joint}: angle_limits must satisfy lower < upper, got [{lower}, {upper}]")]
    AngleLimits { joint: u32, lower: f64, upper: f64 },
    #[error("joint {joint}: anchors are {distance} m apart at the initial pose")]
    AnchorMismatch { joint: u32, distance: f64 },
    #[error("pelvis_body {body} does not exist")]
    MissingPelvis { body: u32 },
    #[error("initial_pelvis_height {declared} does not match pelvis body height {actual}")]
    PelvisHeight { declared: f64, actual: f64 },
    #[error("normalization bounds for {feature}: min must be < max")]
    Bounds { feature: &'static str },
    #[error("reading skeleton file: {0}")]
    Io(String),
    #[error("parsing skeleton file: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDesc {
    pub id: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Half width and half height of the collision box.
    pub half_extents: Vec2,
    pub mass: f64,
    /// Defaults to the solid-box moment of inertia.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    /// Initial center of mass.
    pub position: Vec2,
    #[serde(default)]
    pub angle: f64,
}

impl BodyDesc {
    pub fn inertia(&self) -> f64 {
        self.inertia.unwrap_or_else(|| {
            let (hx, hy) = (self.half_extents.x, self.half_extents.y);
            self.mass * (hx * hx + hy * hy) / 3.0
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDesc {
    pub id: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub body_a: u32,
    pub body_b: u32,
    /// Anchor in the local frame of `body_a`.
    pub anchor_a: Vec2,
    /// Anchor in the local frame of `body_b`.
    pub anchor_b: Vec2,
    /// Bounds on `angle_b - angle_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_limits: Option<[f64; 2]>,
    pub torque_limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonSpec {
    pub name: String,
    pub bodies: Vec<BodyDesc>,
    pub joints: Vec<JointDesc>,
    pub pelvis_body: u32,
    pub initial_pelvis_height: f64,
    #[serde(default)]
    pub normalization: NormalizationBounds,
}

impl SkeletonSpec {
    /// The default biped: pelvis, two thighs, two shins; hips and knees.
    pub fn walker() -> Self {
        const TORQUE_LIMIT: f64 = 150.0;
        let pelvis_half = Vec2::new(0.25, 0.125);
        let limb_half = Vec2::new(0.04, 0.225);
        let shin_y = limb_half.y;
        let thigh_y = 2.0 * limb_half.y + limb_half.y;
        let pelvis_y = 4.0 * limb_half.y + pelvis_half.y;

        let body = |id, name: &str, half_extents, mass, y| BodyDesc {
            id,
            name: name.to_owned(),
            half_extents,
            mass,
            inertia: None,
            position: Vec2::new(0.0, y),
            angle: 0.0,
        };
        let bodies = vec![
            body(0, "pelvis", pelvis_half, 10.0, pelvis_y),
            body(1, "left_thigh", limb_half, 2.5, thigh_y),
            body(2, "left_shin", limb_half, 2.5, shin_y),
            body(3, "right_thigh", limb_half, 2.5, thigh_y),
            body(4, "right_shin", limb_half, 2.5, shin_y),
        ];

        let hip = |id, name: &str, thigh| JointDesc {
            id,
            name: name.to_owned(),
            body_a: 0,
            body_b: thigh,
            anchor_a: Vec2::new(0.0, -pelvis_half.y),
            anchor_b: Vec2::new(0.0, limb_half.y),
            angle_limits: Some([-1.2, 1.2]),
            torque_limit: TORQUE_LIMIT,
        };
        let knee = |id, name: &str, thigh, shin| JointDesc {
            id,
            name: name.to_owned(),
            body_a: thigh,
            body_b: shin,
            anchor_a: Vec2::new(0.0, -limb_half.y),
            anchor_b: Vec2::new(0.0, limb_half.y),
            angle_limits: Some([0.0, 2.5]),
            torque_limit: TORQUE_LIMIT,
        };
        let joints = vec![
            hip(0, "left_hip", 1),
            knee(1, "left_knee", 1, 2),
            hip(2, "right_hip", 3),
            knee(3, "right_knee", 3, 4),
        ];

        SkeletonSpec {
            name: "walker".to_owned(),
            bodies,
            joints,
            pelvis_body: 0,
            initial_pelvis_height: pelvis_y,
            normalization: NormalizationBounds::default(),
        }
    }

    /// A single free box and nothing else.
    pub fn single_box(half_extents: Vec2, mass: f64, position: Vec2) -> Self {
        SkeletonSpec {
            name: "box".to_owned(),
            bodies: vec![BodyDesc {
                id: 0,
                name: String::new(),
                half_extents,
                mass,
                inertia: None,
                position,
                angle: 0.0,
            }],
            joints: Vec::new(),
            pelvis_body: 0,
            initial_pelvis_height: position.y,
            normalization: NormalizationBounds::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SkeletonError> {
        let spec: SkeletonSpec =
            serde_json::from_str(text).map_err(|e| SkeletonError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SkeletonError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SkeletonError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("skeleton serializes")
    }

    /// Bodies sorted by ascending id; the order used by worlds and traces.
    pub fn sorted_bodies(&self) -> Vec<&BodyDesc> {
        let mut bodies: Vec<_> = self.bodies.iter().collect();
        bodies.sort_by_key(|b| b.id);
        bodies
    }

    /// Joints sorted by ascending id; the order of controller outputs.
    pub fn sorted_joints(&self) -> Vec<&JointDesc> {
        let mut joints: Vec<_> = self.joints.iter().collect();
        joints.sort_by_key(|j| j.id);
        joints
    }

    /// Index of body `id` in ascending-id order.
    pub fn body_index(&self, id: u32) -> Option<usize> {
        self.sorted_bodies().iter().position(|b| b.id == id)
    }

    pub fn pelvis_index(&self) -> usize {
        self.body_index(self.pelvis_body)
            .expect("validated skeleton has a pelvis")
    }

    pub fn validate(&self) -> Result<(), SkeletonError> {
        if self.bodies.is_empty() {
            return Err(SkeletonError::NoBodies);
        }
        let bodies = self.sorted_bodies();
        for pair in bodies.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(SkeletonError::DuplicateBody { id: pair[0].id });
            }
        }
        for b in &bodies {
            let positive = [
                ("mass", b.mass),
                ("half_extents.x", b.half_extents.x),
                ("half_extents.y", b.half_extents.y),
                ("inertia", b.inertia()),
            ];
            for (field, value) in positive {
                if !(value.is_finite() && value > 0.0) {
                    return Err(SkeletonError::NonPositive { id: b.id, field, value });
                }
            }
            if !b.position.is_finite() {
                return Err(SkeletonError::NonFinite { id: b.id, field: "position" });
            }
            if !b.angle.is_finite() {
                return Err(SkeletonError::NonFinite { id: b.id, field: "angle" });
            }
        }

        let joints = self.sorted_joints();
        for pair in joints.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(SkeletonError::DuplicateJoint { id: pair[0].id });
            }
        }

        // Union-find over body indices to reject cycles and disconnected parts.
        let mut parent: Vec<usize> = (0..bodies.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let index_of = |id: u32| bodies.iter().position(|b| b.id == id);

        for j in &joints {
            let a = index_of(j.body_a).ok_or(SkeletonError::DanglingBody {
                joint: j.id,
                body: j.body_a,
            })?;
            let b = index_of(j.body_b).ok_or(SkeletonError::DanglingBody {
                joint: j.id,
                body: j.body_b,
            })?;
            if a == b {
                return Err(SkeletonError::SelfJoint { joint: j.id, body: j.body_a });
            }
            if !(j.torque_limit.is_finite() && j.torque_limit > 0.0) {
                return Err(SkeletonError::TorqueLimit { joint: j.id, value: j.torque_limit });
            }
            if let Some([lower, upper]) = j.angle_limits {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(SkeletonError::AngleLimits { joint: j.id, lower, upper });
                }
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(SkeletonError::Cycle { joint: j.id });
            }
            parent[ra] = rb;

            let (ba, bb) = (bodies[a], bodies[b]);
            let wa = ba.position + j.anchor_a.rotate(ba.angle);
            let wb = bb.position + j.anchor_b.rotate(bb.angle);
            let distance = (wb - wa).length();
            if !(distance <= INITIAL_ANCHOR_TOLERANCE) {
                return Err(SkeletonError::AnchorMismatch { joint: j.id, distance });
            }
        }
        let root = find(&mut parent, 0);
        for i in 1..bodies.len() {
            if find(&mut parent, i) != root {
                return Err(SkeletonError::Disconnected {
                    root: bodies[0].id,
                    body: bodies[i].id,
                });
            }
        }

        let pelvis = index_of(self.pelvis_body)
            .ok_or(SkeletonError::MissingPelvis { body: self.pelvis_body })?;
        let actual = bodies[pelvis].position.y;
        if !((actual - self.initial_pelvis_height).abs() <= INITIAL_ANCHOR_TOLERANCE) {
            return Err(SkeletonError::PelvisHeight {
                declared: self.initial_pelvis_height,
                actual,
            });
        }
        self.normalization.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_walker_is_valid() {
        let spec = SkeletonSpec::walker();
        assert_eq!(spec.bodies.len(), 5);
        assert_eq!(spec.joints.len(), 4);
        spec.validate().unwrap();
        assert!((spec.initial_pelvis_height - 1.025).abs() < 1e-12);
    }

    #[test]
    fn dangling_body_is_named() {
        let mut spec = SkeletonSpec::walker();
        spec.joints[2].body_b = 99;
        assert_eq!(
            spec.validate(),
            Err(SkeletonError::DanglingBody { joint: 2, body: 99 })
        );
    }

    #[test]
    fn cycle_is_rejected() {
        let mut spec = SkeletonSpec::walker();
        // shin-to-shin closes a loop through the pelvis
        spec.joints.push(JointDesc {
            id: 9,
            name: String::new(),
            body_a: 2,
            body_b: 4,
            anchor_a: Vec2::ZERO,
            anchor_b: Vec2::ZERO,
            angle_limits: None,
            torque_limit: 1.0,
        });
        assert_eq!(spec.validate(), Err(SkeletonError::Cycle { joint: 9 }));
    }

    #[test]
    fn non_positive_mass_is_rejected() {
        let mut spec = SkeletonSpec::walker();
        spec.bodies[3].mass = 0.0;
        assert!(matches!(
            spec.validate(),
            Err(SkeletonError::NonPositive { id: 3, field: "mass", .. })
        ));
    }

    #[test]
    fn disconnected_body_is_rejected() {
        let mut spec = SkeletonSpec::walker();
        spec.joints.retain(|j| j.id != 3);
        assert!(matches!(spec.validate(), Err(SkeletonError::Disconnected { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut value = serde_json::to_value(SkeletonSpec::walker()).unwrap();
        value["bodies"][0]["colour"] = serde_json::json!("red");
        let err = SkeletonSpec::from_json(&value.to_string()).unwrap_err();
        assert!(matches!(err, SkeletonError::Parse(msg) if msg.contains("colour")));
    }

    #[test]
    fn json_round_trip() {
        let spec = SkeletonSpec::walker();
        assert_eq!(SkeletonSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}
