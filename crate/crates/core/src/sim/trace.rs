use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::world::WorldState;
use crate::math::Vec2;

/// Version tag written into every trace document.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Pose of one body in one frame, serialized as `[x, y, angle]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose {
    pub position: Vec2,
    pub angle: f64,
}

impl From<[f64; 3]> for Pose {
    fn from([x, y, angle]: [f64; 3]) -> Self {
        Pose { position: Vec2::new(x, y), angle }
    }
}

impl From<Pose> for [f64; 3] {
    fn from(p: Pose) -> Self {
        [p.position.x, p.position.y, p.angle]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("unsupported trace schema_version {0}")]
    SchemaVersion(u32),
    #[error("trace has no frames")]
    Empty,
    #[error("frame {frame} has {got} poses, expected {expected}")]
    FrameWidth { frame: usize, expected: usize, got: usize },
    #[error("dt must be finite and positive, got {0}")]
    Timestep(f64),
    #[error("termination_frame {frame} is past the last frame {last}")]
    TerminationFrame { frame: usize, last: usize },
    #[error("parsing trace: {0}")]
    Parse(String),
}

/// Per-frame record of every body pose, in body-id order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnimationTrace {
    pub schema_version: u32,
    pub skeleton_name: String,
    pub dt: f64,
    pub frames: Vec<Vec<Pose>>,
    pub terminated_early: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination_frame: Option<usize>,
}

impl AnimationTrace {
    pub fn new(skeleton_name: impl Into<String>, dt: f64) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            skeleton_name: skeleton_name.into(),
            dt,
            frames: Vec::new(),
            terminated_early: false,
            termination_frame: None,
        }
    }

    /// Appends the current pose of every dynamic body.
    pub fn record_frame(&mut self, world: &WorldState) {
        debug_assert!(
            self.frames.first().is_none_or(|f| f.len() == world.bodies.len()),
            "world does not match the traced skeleton"
        );
        self.frames.push(
            world
                .bodies
                .iter()
                .map(|b| Pose { position: b.position, angle: b.angle })
                .collect(),
        );
    }

    /// Marks the last recorded frame as the point of early termination.
    pub fn terminate(&mut self) {
        self.terminated_early = true;
        self.termination_frame = Some(self.frames.len().saturating_sub(1));
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn body_count(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    /// Duration covered by the frames, in seconds.
    pub fn duration(&self) -> f64 {
        self.frames.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.schema_version != TRACE_SCHEMA_VERSION {
            return Err(TraceError::SchemaVersion(self.schema_version));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(TraceError::Timestep(self.dt));
        }
        let expected = self.frames.first().ok_or(TraceError::Empty)?.len();
        for (frame, poses) in self.frames.iter().enumerate() {
            if poses.len() != expected {
                return Err(TraceError::FrameWidth { frame, expected, got: poses.len() });
            }
        }
        if let Some(frame) = self.termination_frame {
            let last = self.frames.len() - 1;
            if frame > last {
                return Err(TraceError::TerminationFrame { frame, last });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let trace: AnimationTrace =
            serde_json::from_str(text).map_err(|e| TraceError::Parse(e.to_string()))?;
        trace.validate()?;
        Ok(trace)
    }

    /// Index of the first frame where the two traces differ, comparing bits.
    pub fn first_divergence(&self, other: &AnimationTrace) -> Option<usize> {
        let same_pose = |a: &Pose, b: &Pose| {
            a.position.x.to_bits() == b.position.x.to_bits()
                && a.position.y.to_bits() == b.position.y.to_bits()
                && a.angle.to_bits() == b.angle.to_bits()
        };
        let n = self.frames.len().max(other.frames.len());
        (0..n).find(|&i| match (self.frames.get(i), other.frames.get(i)) {
            (Some(a), Some(b)) => {
                a.len() != b.len() || !a.iter().zip(b).all(|(p, q)| same_pose(p, q))
            }
            _ => true,
        })
    }
}
