//! Run output directory:
//!
//! ```text
//! <out>/manifest.json   everything needed to reproduce the run; written first
//! <out>/history.log     one JSON GenerationStats per line, generation 0 first
//! <out>/walltime.log    one {"generation", "seconds"} per line (not reproducible)
//! <out>/best.genome     best-ever genome, JSON
//! <out>/best.trace      the best genome's episode, JSON AnimationTrace
//! ```
//!
//! Everything except `walltime.log` is a pure function of the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crowdwalk_core::controller::Genome;
use crowdwalk_core::evolve::{EpisodeConfig, RunConfig};
use crowdwalk_core::sim::AnimationTrace;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const HISTORY: &str = "history.log";
pub const WALLTIME: &str = "walltime.log";
pub const BEST_GENOME: &str = "best.genome";
pub const BEST_TRACE: &str = "best.trace";

pub const MANIFEST_VERSION: u32 = 1;

/// A genome injected from the gallery, kept verbatim so the run can be
/// repeated without the service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSeed {
    pub source_id: String,
    pub mean_rating: f64,
    pub genome: Genome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub master_seed: u64,
    /// "ga" or "de"; the parameters are in `run.optimizer`.
    pub optimizer: String,
    pub generations: u64,
    pub run: RunConfig,
    pub hidden_layers: Vec<usize>,
    /// Resolved episode, including the full skeleton description.
    pub episode: EpisodeConfig,
    /// Where the skeleton was loaded from; informational, `episode` is authoritative.
    pub skeleton_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub rating_seeds: Vec<ManifestSeed>,
}

impl RunManifest {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != MANIFEST_VERSION {
            return Err(CliError::Usage(format!("unsupported manifest schema_version {}", self.schema_version)));
        }
        if self.master_seed != self.run.master_seed
            || self.generations != self.run.generations
            || self.optimizer != self.run.optimizer.tag()
        {
            return Err(CliError::Usage("manifest header disagrees with its run config".into()));
        }
        Ok(())
    }
}

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn create(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.root)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.root.display())))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        let tmp = path.with_extension("tmp");
        let io = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    fn read(&self, name: &str) -> Result<String, CliError> {
        read_file(&self.path(name))
    }

    pub fn manifest(&self) -> Result<RunManifest, CliError> {
        load_manifest(&self.path(MANIFEST))
    }

    pub fn best_genome(&self) -> Result<Genome, CliError> {
        let path = self.path(BEST_GENOME);
        let genome: Genome = serde_json::from_str(&self.read(BEST_GENOME)?)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        genome.validate().map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(genome)
    }

    pub fn best_trace(&self) -> Result<AnimationTrace, CliError> {
        load_trace(&self.path(BEST_TRACE))
    }

    pub fn history_text(&self) -> Result<String, CliError> {
        self.read(HISTORY)
    }
}

/// Missing inputs are a usage problem; unreadable ones are a runtime failure.
pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Usage(format!("{} does not exist", path.display())),
        _ => CliError::Runtime(format!("cannot read {}: {e}", path.display())),
    })
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let manifest: RunManifest = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn load_trace(path: &Path) -> Result<AnimationTrace, CliError> {
    AnimationTrace::from_json(&read_file(path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("manifest types serialize");
    s.push('\n');
    s
}
