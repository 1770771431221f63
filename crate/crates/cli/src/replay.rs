use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use crowdwalk_core::controller::Genome;
use crowdwalk_core::evolve::{evaluate, EpisodeConfig};
use crowdwalk_core::sim::AnimationTrace;

use crate::args::ReplayArgs;
use crate::run_dir::{self, RunDir};
use crate::{CliError, Globals};

/// Files of a gallery solution directory.
const RECORD_FILE: &str = "record.json";
const SOLUTION_TRACE_FILE: &str = "trace.json";

#[derive(Clone, Debug, PartialEq)]
pub enum ReplayVerdict {
    Pass { frames: usize },
    Fail { frame: usize, detail: String },
}

struct Subject {
    genome: Genome,
    episode: EpisodeConfig,
    trace_path: PathBuf,
}

fn gallery_subject(dir: &Path) -> Result<Subject, CliError> {
    let path = dir.join(RECORD_FILE);
    let doc: serde_json::Value = serde_json::from_str(&run_dir::read_file(&path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let field = |name: &str| {
        doc.get(name)
            .cloned()
            .ok_or_else(|| CliError::Runtime(format!("{}: missing {name}", path.display())))
    };
    let genome: Genome = serde_json::from_value(field("genome")?)
        .map_err(|e| CliError::Runtime(format!("{}: genome: {e}", path.display())))?;
    let episode: EpisodeConfig = serde_json::from_value(field("episode")?)
        .map_err(|e| CliError::Runtime(format!("{}: episode: {e}", path.display())))?;
    Ok(Subject { genome, episode, trace_path: dir.join(SOLUTION_TRACE_FILE) })
}

fn subject(dir: &Path) -> Result<Subject, CliError> {
    if dir.join(run_dir::MANIFEST).is_file() {
        let run = RunDir::new(dir);
        Ok(Subject {
            genome: run.best_genome()?,
            episode: run.manifest()?.episode,
            trace_path: run.path(run_dir::BEST_TRACE),
        })
    } else if dir.join(RECORD_FILE).is_file() {
        gallery_subject(dir)
    } else {
        Err(CliError::Usage(format!(
            "{} is neither a run directory ({}) nor a gallery solution ({})",
            dir.display(),
            run_dir::MANIFEST,
            RECORD_FILE
        )))
    }
}

fn compare(stored: &AnimationTrace, replayed: &AnimationTrace) -> ReplayVerdict {
    if let Some(frame) = stored.first_divergence(replayed) {
        let detail = match (stored.frames.get(frame), replayed.frames.get(frame)) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(b)
                .position(|(p, q)| {
                    [p.position.x, p.position.y, p.angle].map(f64::to_bits)
                        != [q.position.x, q.position.y, q.angle].map(f64::to_bits)
                })
                .map(|body| format!("body {body}: stored {:?}, replayed {:?}", a[body], b[body]))
                .unwrap_or_else(|| format!("stored {} bodies, replayed {}", a.len(), b.len())),
            _ => format!("stored {} frames, replayed {}", stored.frames.len(), replayed.frames.len()),
        };
        return ReplayVerdict::Fail { frame, detail };
    }
    let frames = stored.frames.len();
    if stored.terminated_early != replayed.terminated_early || stored.termination_frame != replayed.termination_frame {
        let detail = format!(
            "termination differs: stored {:?}, replayed {:?}",
            stored.termination_frame, replayed.termination_frame
        );
        return ReplayVerdict::Fail { frame: frames, detail };
    }
    if stored.dt.to_bits() != replayed.dt.to_bits() || stored.skeleton_name != replayed.skeleton_name {
        return ReplayVerdict::Fail { frame: 0, detail: "trace header (dt or skeleton) differs".into() };
    }
    ReplayVerdict::Pass { frames }
}

/// Re-simulates the genome in `dir` and compares against its stored trace
/// (or `trace_override`), bit for bit.
pub fn replay(dir: &Path, trace_override: Option<&Path>) -> Result<ReplayVerdict, CliError> {
    let subject = subject(dir)?;
    let trace_path = trace_override.map(Path::to_path_buf).unwrap_or(subject.trace_path);
    let stored = run_dir::load_trace(&trace_path)?;
    let replayed = catch_unwind(AssertUnwindSafe(|| evaluate(&subject.genome, &subject.episode)))
        .map_err(|p| CliError::Runtime(format!("simulation panicked: {}", crate::panic_message(&*p))))?
        .map_err(|e| CliError::Runtime(format!("replay failed: {e}")))?;
    Ok(compare(&stored, &replayed.trace))
}

pub(crate) fn command(globals: &Globals, args: &ReplayArgs) -> Result<(), CliError> {
    let dir = args
        .path
        .clone()
        .or_else(|| globals.out.clone())
        .ok_or_else(|| CliError::Usage("replay needs a directory (positional PATH or --out)".into()))?;
    match replay(&dir, args.trace.as_deref())? {
        ReplayVerdict::Pass { frames } => {
            println!("PASS {}: {frames} frames identical", dir.display());
            Ok(())
        }
        ReplayVerdict::Fail { frame, detail } => {
            println!("FAIL {}: first divergent frame {frame} ({detail})", dir.display());
            Err(CliError::Runtime(format!("trace mismatch at frame {frame}")))
        }
    }
}
