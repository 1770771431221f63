//! Solution persistence and crowd-rating aggregation.
//!
//! A solution is a genome, the trace it produced, and the crowd's ratings of
//! that trace. Ratings are averaged into a [`CrowdScore`] and classified
//! against a threshold (default 0.5, inclusive).

mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::Genome;
use crate::evolve::{EpisodeConfig, RunConfig};
use crate::serde_ext;
use crate::sim::AnimationTrace;

pub use store::{GalleryStore, SolutionSummary, DEFAULT_PAGE_SIZE};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Rough number of votes each solution is expected to collect.
pub const EXPECTED_RATINGS_PER_SOLUTION: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum GalleryError {
    #[error("solution {0} not found")]
    NotFound(String),
    #[error("solution {0} already exists")]
    Duplicate(String),
    #[error("invalid {field}: {message}")]
    Validation { field: &'static str, message: String },
    #[error("rating value {0} is outside [0, 1]")]
    RatingOutOfRange(f64),
    #[error("unsupported schema_version {found} in {path}")]
    SchemaVersion { path: String, found: u32 },
    #[error("corrupt store file {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("store i/o: {0}")]
    Io(String),
}

impl GalleryError {
    pub(crate) fn validation(field: &'static str, message: impl Into<String>) -> Self {
        GalleryError::Validation { field, message: message.into() }
    }
}

/// Opaque solution identifier: 1-64 characters from `[A-Za-z0-9_-]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SolutionId(String);

impl SolutionId {
    pub fn new(id: impl Into<String>) -> Result<Self, GalleryError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 64
            && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
        if ok {
            Ok(Self(id))
        } else {
            Err(GalleryError::validation("id", format!("{id:?} is not a valid solution id")))
        }
    }

    pub fn generate() -> Self {
        Self(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SolutionId {
    type Error = GalleryError;
    fn try_from(s: String) -> Result<Self, GalleryError> {
        SolutionId::new(s)
    }
}

impl From<SolutionId> for String {
    fn from(id: SolutionId) -> String {
        id.0
    }
}

impl std::fmt::Display for SolutionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rating {
    /// 1.0 for "natural and life-like", 0.0 for not; any value in `[0, 1]` is stored.
    pub value: f64,
    pub rater_token: String,
    pub submitted_at: DateTime<Utc>,
}

impl Rating {
    pub fn new(value: f64, rater_token: impl Into<String>) -> Self {
        Self { value, rater_token: rater_token.into(), submitted_at: Utc::now() }
    }

    pub fn validate(&self) -> Result<(), GalleryError> {
        if !(0.0..=1.0).contains(&self.value) {
            return Err(GalleryError::RatingOutOfRange(self.value));
        }
        if self.rater_token.trim().is_empty() || self.rater_token.len() > 256 {
            return Err(GalleryError::validation("rater_token", "must be 1-256 characters"));
        }
        Ok(())
    }
}

/// Records `rating`, replacing any earlier rating from the same token in place.
pub fn apply_rating(ratings: &mut Vec<Rating>, rating: Rating) {
    match ratings.iter_mut().find(|r| r.rater_token == rating.rater_token) {
        Some(existing) => *existing = rating,
        None => ratings.push(rating),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreClass {
    Good,
    Poor,
    Unrated,
}

impl std::fmt::Display for ScoreClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreClass::Good => "good",
            ScoreClass::Poor => "poor",
            ScoreClass::Unrated => "unrated",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrowdScore {
    /// Arithmetic mean of the ratings; 0 when there are none.
    pub mean: f64,
    pub count: usize,
    pub class: ScoreClass,
}

/// Good iff at least one rating and `mean >= threshold`.
pub fn classify(mean: f64, count: usize, threshold: f64) -> ScoreClass {
    if count == 0 {
        ScoreClass::Unrated
    } else if mean >= threshold {
        ScoreClass::Good
    } else {
        ScoreClass::Poor
    }
}

pub fn aggregate(ratings: &[Rating], threshold: f64) -> CrowdScore {
    let count = ratings.len();
    let mean = if count == 0 {
        0.0
    } else {
        ratings.iter().map(|r| r.value).sum::<f64>() / count as f64
    };
    CrowdScore { mean, count, class: classify(mean, count, threshold) }
}

/// A stored solution: the genome, the trace it produced, and its ratings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub schema_version: u32,
    pub id: SolutionId,
    pub created_at: DateTime<Utc>,
    pub skeleton_name: String,
    /// Optimizer tag, parameters and seed that produced the genome.
    pub optimizer: RunConfig,
    /// Everything needed to re-simulate the trace from the genome.
    pub episode: EpisodeConfig,
    #[serde(with = "serde_ext::fitness")]
    pub mechanistic_fitness: f64,
    pub genome: Genome,
    pub trace: AnimationTrace,
    #[serde(default)]
    pub ratings: Vec<Rating>,
}

impl SolutionRecord {
    pub fn validate(&self) -> Result<(), GalleryError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GalleryError::SchemaVersion {
                path: "record".into(),
                found: self.schema_version,
            });
        }
        let skeleton = &self.episode.skeleton;
        if self.skeleton_name != skeleton.name {
            return Err(GalleryError::validation(
                "skeleton_name",
                format!("{:?} differs from episode skeleton {:?}", self.skeleton_name, skeleton.name),
            ));
        }
        self.episode
            .validate()
            .map_err(|e| GalleryError::validation("episode", e.to_string()))?;
        self.optimizer
            .validate()
            .map_err(|e| GalleryError::validation("optimizer", e.to_string()))?;
        self.genome
            .validate()
            .and_then(|()| self.genome.topology.check_skeleton(skeleton))
            .map_err(|e| GalleryError::validation("genome", e.to_string()))?;
        self.trace
            .validate()
            .map_err(|e| GalleryError::validation("trace", e.to_string()))?;
        if self.trace.body_count() != skeleton.bodies.len() {
            return Err(GalleryError::validation(
                "trace",
                format!(
                    "frames have {} bodies, skeleton {:?} has {}",
                    self.trace.body_count(),
                    skeleton.name,
                    skeleton.bodies.len()
                ),
            ));
        }
        if self.trace.skeleton_name != self.skeleton_name {
            return Err(GalleryError::validation("trace", "skeleton_name differs from record"));
        }
        if self.mechanistic_fitness.is_nan() {
            return Err(GalleryError::validation("mechanistic_fitness", "is NaN"));
        }
        let mut tokens = std::collections::HashSet::new();
        for r in &self.ratings {
            r.validate()?;
            if !tokens.insert(&r.rater_token) {
                return Err(GalleryError::validation("ratings", "duplicate rater_token"));
            }
        }
        Ok(())
    }

    pub fn score(&self, threshold: f64) -> CrowdScore {
        aggregate(&self.ratings, threshold)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// A solution without its trace, plus its current score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionView {
    pub schema_version: u32,
    pub id: SolutionId,
    pub created_at: DateTime<Utc>,
    pub skeleton_name: String,
    pub optimizer: RunConfig,
    pub episode: EpisodeConfig,
    #[serde(with = "serde_ext::fitness")]
    pub mechanistic_fitness: f64,
    pub genome: Genome,
    pub ratings: Vec<Rating>,
    pub score: CrowdScore,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rating(value: f64, token: &str) -> Rating {
        Rating::new(value, token)
    }

    #[test]
    fn mean_and_class() {
        let ratings: Vec<_> = [1.0, 0.0, 1.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| rating(v, &format!("t{i}")))
            .collect();
        let s = aggregate(&ratings, DEFAULT_THRESHOLD);
        assert_eq!((s.mean, s.count, s.class), (0.75, 4, ScoreClass::Good));

        let s = aggregate(&[rating(0.4, "a")], DEFAULT_THRESHOLD);
        assert_eq!((s.mean, s.count, s.class), (0.4, 1, ScoreClass::Poor));
    }

    #[test]
    fn half_is_good() {
        let ratings: Vec<_> = (0..10).map(|i| rating((i % 2) as f64, &format!("t{i}"))).collect();
        let s = aggregate(&ratings, DEFAULT_THRESHOLD);
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.class, ScoreClass::Good);
    }

    #[test]
    fn no_ratings_is_unrated() {
        let s = aggregate(&[], DEFAULT_THRESHOLD);
        assert_eq!((s.count, s.class), (0, ScoreClass::Unrated));
    }

    #[test]
    fn resubmission_replaces() {
        let mut ratings = Vec::new();
        apply_rating(&mut ratings, rating(0.0, "same"));
        apply_rating(&mut ratings, rating(1.0, "same"));
        let s = aggregate(&ratings, DEFAULT_THRESHOLD);
        assert_eq!((s.mean, s.count), (1.0, 1));
    }

    #[test]
    fn rating_range_is_enforced() {
        for v in [1.5, -0.1, f64::NAN] {
            assert!(matches!(rating(v, "x").validate(), Err(GalleryError::RatingOutOfRange(_))));
        }
        assert!(rating(1.0, " ").validate().is_err());
    }

    #[test]
    fn solution_ids() {
        assert!(SolutionId::new("abc-DEF_9").is_ok());
        for bad in ["", "../etc", "a b", &"x".repeat(65)] {
            assert!(SolutionId::new(bad).is_err(), "{bad}");
        }
        assert_eq!(SolutionId::generate().as_str().len(), 32);
    }
}
