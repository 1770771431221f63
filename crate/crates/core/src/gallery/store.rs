//! Directory-backed gallery.
//!
//! ```text
//! <root>/index.json                  {"schema_version":1,"ids":[...]}
//! <root>/solutions/<id>/record.json  solution without trace and ratings
//! <root>/solutions/<id>/trace.json   the animation trace, served verbatim
//! <root>/solutions/<id>/ratings.log  append-only, one rating per line
//! ```
//!
//! Every acknowledged write has been fsynced. Current ratings are the log
//! replayed with per-token replacement; a torn final line (a crash mid-append,
//! never acknowledged) is ignored on open.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    aggregate, apply_rating, CrowdScore, GalleryError, Rating, SolutionId, SolutionRecord,
    SolutionView, SCHEMA_VERSION,
};
use crate::controller::Genome;
use crate::evolve::{EpisodeConfig, RunConfig};
use crate::serde_ext;
use crate::sim::AnimationTrace;

pub const DEFAULT_PAGE_SIZE: usize = 50;

const INDEX_FILE: &str = "index.json";
const SOLUTIONS_DIR: &str = "solutions";
const RECORD_FILE: &str = "record.json";
const TRACE_FILE: &str = "trace.json";
const RATINGS_FILE: &str = "ratings.log";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexDocument {
    schema_version: u32,
    ids: Vec<SolutionId>,
}

/// `record.json`: a [`SolutionRecord`] minus the trace and the ratings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDocument {
    schema_version: u32,
    id: SolutionId,
    created_at: DateTime<Utc>,
    skeleton_name: String,
    optimizer: RunConfig,
    episode: EpisodeConfig,
    #[serde(with = "serde_ext::fitness")]
    mechanistic_fitness: f64,
    genome: Genome,
}

/// One row of the gallery listing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub id: SolutionId,
    pub skeleton: String,
    #[serde(with = "serde_ext::fitness")]
    pub mechanistic_fitness: f64,
    pub mean: f64,
    pub count: usize,
    pub class: super::ScoreClass,
    pub created_at: DateTime<Utc>,
}

struct Entry {
    doc: SolutionDocument,
    /// Held for the whole append-then-apply sequence: the single writer per solution.
    ratings: Mutex<Vec<Rating>>,
}

#[derive(Default)]
struct State {
    order: Vec<SolutionId>,
    entries: HashMap<SolutionId, Arc<Entry>>,
}

pub struct GalleryStore {
    root: PathBuf,
    threshold: f64,
    state: RwLock<State>,
}

fn io_err(path: &Path, e: std::io::Error) -> GalleryError {
    GalleryError::Io(format!("{}: {e}", path.display()))
}

fn corrupt(path: &Path, message: impl std::fmt::Display) -> GalleryError {
    GalleryError::Corrupt { path: path.display().to_string(), message: message.to_string() }
}

fn sync_dir(dir: &Path) -> Result<(), GalleryError> {
    File::open(dir).and_then(|d| d.sync_all()).map_err(|e| io_err(dir, e))
}

/// Write-to-temp, fsync, rename, fsync the directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), GalleryError> {
    let tmp = path.with_extension("tmp");
    let mut file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    file.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    file.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    sync_dir(path.parent().expect("store files live in a directory"))
}

fn read_ratings_log(path: &Path) -> Result<Vec<Rating>, GalleryError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Rating>(line) {
            Ok(r) => out.push(r),
            // torn tail from an interrupted append; it was never acknowledged
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => return Err(corrupt(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

impl GalleryStore {
    /// Opens (creating if needed) the store at `root`.
    pub fn open(root: impl Into<PathBuf>, threshold: f64) -> Result<Self, GalleryError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(GalleryError::validation("threshold", format!("{threshold} is outside [0, 1]")));
        }
        let root = root.into();
        let solutions = root.join(SOLUTIONS_DIR);
        fs::create_dir_all(&solutions).map_err(|e| io_err(&solutions, e))?;

        let index_path = root.join(INDEX_FILE);
        let ids = match fs::read_to_string(&index_path) {
            Ok(text) => {
                let index: IndexDocument =
                    serde_json::from_str(&text).map_err(|e| corrupt(&index_path, e))?;
                if index.schema_version != SCHEMA_VERSION {
                    return Err(GalleryError::SchemaVersion {
                        path: index_path.display().to_string(),
                        found: index.schema_version,
                    });
                }
                index.ids
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&index_path, e)),
        };

        let mut state = State::default();
        for id in ids {
            let dir = solutions.join(id.as_str());
            let record_path = dir.join(RECORD_FILE);
            let text = fs::read_to_string(&record_path).map_err(|e| io_err(&record_path, e))?;
            let doc: SolutionDocument =
                serde_json::from_str(&text).map_err(|e| corrupt(&record_path, e))?;
            if doc.schema_version != SCHEMA_VERSION {
                return Err(GalleryError::SchemaVersion {
                    path: record_path.display().to_string(),
                    found: doc.schema_version,
                });
            }
            let mut ratings = Vec::new();
            for r in read_ratings_log(&dir.join(RATINGS_FILE))? {
                apply_rating(&mut ratings, r);
            }
            state.order.push(id.clone());
            state.entries.insert(id, Arc::new(Entry { doc, ratings: Mutex::new(ratings) }));
        }

        Ok(Self { root, threshold, state: RwLock::new(state) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.state.read().expect("store lock").order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn solution_dir(&self, id: &SolutionId) -> PathBuf {
        self.root.join(SOLUTIONS_DIR).join(id.as_str())
    }

    fn entry(&self, id: &SolutionId) -> Result<Arc<Entry>, GalleryError> {
        self.state
            .read()
            .expect("store lock")
            .entries
            .get(id)
            .cloned()
            .ok_or_else(|| GalleryError::NotFound(id.to_string()))
    }

    /// Validates and durably stores a new solution.
    pub fn put_solution(&self, record: &SolutionRecord) -> Result<SolutionId, GalleryError> {
        record.validate()?;
        let mut state = self.state.write().expect("store lock");
        if state.entries.contains_key(&record.id) {
            return Err(GalleryError::Duplicate(record.id.to_string()));
        }

        let dir = self.solution_dir(&record.id);
        if dir.exists() {
            // left behind by a put that never reached the index
            fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let doc = SolutionDocument {
            schema_version: record.schema_version,
            id: record.id.clone(),
            created_at: record.created_at,
            skeleton_name: record.skeleton_name.clone(),
            optimizer: record.optimizer.clone(),
            episode: record.episode.clone(),
            mechanistic_fitness: record.mechanistic_fitness,
            genome: record.genome.clone(),
        };
        let doc_json = serde_json::to_vec(&doc).expect("document serializes");
        write_atomic(&dir.join(RECORD_FILE), &doc_json)?;
        write_atomic(&dir.join(TRACE_FILE), record.trace.to_json().as_bytes())?;
        let mut log = String::new();
        for r in &record.ratings {
            log.push_str(&serde_json::to_string(r).expect("rating serializes"));
            log.push('\n');
        }
        write_atomic(&dir.join(RATINGS_FILE), log.as_bytes())?;
        sync_dir(&self.root.join(SOLUTIONS_DIR))?;

        let mut ids = state.order.clone();
        ids.push(record.id.clone());
        let index = IndexDocument { schema_version: SCHEMA_VERSION, ids };
        write_atomic(
            &self.root.join(INDEX_FILE),
            &serde_json::to_vec(&index).expect("index serializes"),
        )?;

        state.order = index.ids;
        state.entries.insert(
            record.id.clone(),
            Arc::new(Entry { doc, ratings: Mutex::new(record.ratings.clone()) }),
        );
        Ok(record.id.clone())
    }

    /// The full record, trace included.
    pub fn get(&self, id: &SolutionId) -> Result<SolutionRecord, GalleryError> {
        let entry = self.entry(id)?;
        let path = self.solution_dir(id).join(TRACE_FILE);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let trace = AnimationTrace::from_json(&text).map_err(|e| corrupt(&path, e))?;
        let doc = entry.doc.clone();
        let ratings = entry.ratings.lock().expect("ratings lock").clone();
        Ok(SolutionRecord {
            schema_version: doc.schema_version,
            id: doc.id,
            created_at: doc.created_at,
            skeleton_name: doc.skeleton_name,
            optimizer: doc.optimizer,
            episode: doc.episode,
            mechanistic_fitness: doc.mechanistic_fitness,
            genome: doc.genome,
            trace,
            ratings,
        })
    }

    /// The record without its trace, with the current score.
    pub fn view(&self, id: &SolutionId) -> Result<SolutionView, GalleryError> {
        let entry = self.entry(id)?;
        Ok(self.view_of(&entry))
    }

    fn view_of(&self, entry: &Entry) -> SolutionView {
        let doc = entry.doc.clone();
        let ratings = entry.ratings.lock().expect("ratings lock").clone();
        let score = aggregate(&ratings, self.threshold);
        SolutionView {
            schema_version: doc.schema_version,
            id: doc.id,
            created_at: doc.created_at,
            skeleton_name: doc.skeleton_name,
            optimizer: doc.optimizer,
            episode: doc.episode,
            mechanistic_fitness: doc.mechanistic_fitness,
            genome: doc.genome,
            ratings,
            score,
        }
    }

    /// The stored trace document, byte for byte.
    pub fn trace_bytes(&self, id: &SolutionId) -> Result<Vec<u8>, GalleryError> {
        self.entry(id)?;
        let path = self.solution_dir(id).join(TRACE_FILE);
        fs::read(&path).map_err(|e| io_err(&path, e))
    }

    /// Appends the rating to the solution's log (fsynced), then applies it.
    pub fn submit_rating(&self, id: &SolutionId, rating: Rating) -> Result<CrowdScore, GalleryError> {
        rating.validate()?;
        let entry = self.entry(id)?;
        let mut ratings = entry.ratings.lock().expect("ratings lock");

        let path = self.solution_dir(id).join(RATINGS_FILE);
        let mut line = serde_json::to_string(&rating).expect("rating serializes");
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        file.write_all(line.as_bytes()).map_err(|e| io_err(&path, e))?;
        file.sync_data().map_err(|e| io_err(&path, e))?;

        apply_rating(&mut ratings, rating);
        Ok(aggregate(&ratings, self.threshold))
    }

    pub fn score(&self, id: &SolutionId) -> Result<CrowdScore, GalleryError> {
        let entry = self.entry(id)?;
        let ratings = entry.ratings.lock().expect("ratings lock");
        Ok(aggregate(&ratings, self.threshold))
    }

    /// Every rating ever accepted for `id`, in submission order, read back from the log.
    pub fn rating_history(&self, id: &SolutionId) -> Result<Vec<Rating>, GalleryError> {
        let entry = self.entry(id)?;
        let _writer = entry.ratings.lock().expect("ratings lock");
        read_ratings_log(&self.solution_dir(id).join(RATINGS_FILE))
    }

    /// Solutions in insertion order, optionally filtered by skeleton, paged by offset.
    /// Returns the page and the offset of the next page, if any.
    pub fn list(
        &self,
        skeleton: Option<&str>,
        offset: usize,
        limit: usize,
    ) -> (Vec<SolutionSummary>, Option<usize>) {
        let state = self.state.read().expect("store lock");
        let matching: Vec<&Arc<Entry>> = state
            .order
            .iter()
            .map(|id| &state.entries[id])
            .filter(|e| skeleton.is_none_or(|s| e.doc.skeleton_name == s))
            .collect();
        let page: Vec<SolutionSummary> = matching
            .iter()
            .skip(offset)
            .take(limit)
            .map(|e| {
                let score = aggregate(&e.ratings.lock().expect("ratings lock"), self.threshold);
                SolutionSummary {
                    id: e.doc.id.clone(),
                    skeleton: e.doc.skeleton_name.clone(),
                    mechanistic_fitness: e.doc.mechanistic_fitness,
                    mean: score.mean,
                    count: score.count,
                    class: score.class,
                    created_at: e.doc.created_at,
                }
            })
            .collect();
        let end = offset.saturating_add(page.len());
        let next = (end < matching.len() && !page.is_empty()).then_some(end);
        (page, next)
    }

    /// Up to `k` good solutions, best first: mean desc, count desc,
    /// mechanistic fitness desc, id asc.
    pub fn top_rated(&self, skeleton: Option<&str>, k: usize) -> Vec<SolutionView> {
        let entries: Vec<Arc<Entry>> = {
            let state = self.state.read().expect("store lock");
            state
                .order
                .iter()
                .map(|id| state.entries[id].clone())
                .filter(|e| skeleton.is_none_or(|s| e.doc.skeleton_name == s))
                .collect()
        };
        let mut good: Vec<SolutionView> = entries
            .iter()
            .map(|e| self.view_of(e))
            .filter(|v| v.score.class == super::ScoreClass::Good)
            .collect();
        good.sort_by(|a, b| {
            b.score
                .mean
                .total_cmp(&a.score.mean)
                .then(b.score.count.cmp(&a.score.count))
                .then(b.mechanistic_fitness.total_cmp(&a.mechanistic_fitness))
                .then(a.id.cmp(&b.id))
        });
        good.truncate(k);
        good
    }
}
