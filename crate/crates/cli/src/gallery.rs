use chrono::Utc;
use crowdwalk_core::evolve::parse_history;
use crowdwalk_core::gallery::{SolutionId, SolutionRecord, SCHEMA_VERSION};
use crowdwalk_service::Client;

use crate::args::{StatsArgs, UploadArgs};
use crate::config::{self, pick, FileConfig};
use crate::run_dir::{self, RunDir};
use crate::{CliError, Globals};

fn service_url(flag: &Option<String>, file: &FileConfig) -> String {
    pick(flag.clone(), file.service.url.clone()).unwrap_or_else(|| config::DEFAULT_URL.into())
}

/// Builds the gallery record for a run's best solution. The mechanistic
/// fitness is recomputed from the trace so that any crowd bonus used during
/// the run does not leak into it.
pub fn record_from_run(dir: &RunDir, id: Option<&str>) -> Result<SolutionRecord, CliError> {
    let manifest = dir.manifest()?;
    let genome = dir.best_genome()?;
    let trace = dir.best_trace()?;
    let id = match id {
        Some(s) => SolutionId::new(s).map_err(|e| CliError::Usage(e.to_string()))?,
        None => SolutionId::generate(),
    };
    let episode = manifest.episode;
    let record = SolutionRecord {
        schema_version: SCHEMA_VERSION,
        id,
        created_at: Utc::now(),
        skeleton_name: episode.skeleton.name.clone(),
        optimizer: manifest.run,
        mechanistic_fitness: episode.fitness.score(&trace, &episode.skeleton),
        episode,
        genome,
        trace,
        ratings: Vec::new(),
    };
    record
        .validate()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.root().display())))?;
    Ok(record)
}

pub(crate) fn upload(globals: &Globals, args: &UploadArgs, file: &FileConfig) -> Result<(), CliError> {
    let root = args
        .path
        .clone()
        .or_else(|| globals.out.clone())
        .ok_or_else(|| CliError::Usage("upload needs a run directory (positional PATH or --out)".into()))?;
    let record = record_from_run(&RunDir::new(root), args.id.as_deref())?;
    let client = Client::new(&service_url(&args.url, file));
    let id = crate::runtime()?
        .block_on(client.upload(&record))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("uploaded {id} (mechanistic_fitness {})", record.mechanistic_fitness);
    Ok(())
}

pub(crate) fn stats(globals: &Globals, args: &StatsArgs, file: &FileConfig) -> Result<(), CliError> {
    let run = args.run.clone().or_else(|| if args.id.is_none() { globals.out.clone() } else { None });
    if args.id.is_none() && run.is_none() {
        return Err(CliError::Usage("stats needs --id, --run, or --out".into()));
    }
    if let Some(raw) = &args.id {
        let id = SolutionId::new(raw.as_str()).map_err(|e| CliError::Usage(e.to_string()))?;
        let client = Client::new(&service_url(&args.url, file));
        let view = crate::runtime()?
            .block_on(client.solution(&id))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("id: {}", view.id);
        println!("skeleton: {}", view.skeleton_name);
        println!("mechanistic_fitness: {}", view.mechanistic_fitness);
        println!("mean: {}", view.score.mean);
        println!("count: {}", view.score.count);
        println!("class: {}", view.score.class);
    }
    if let Some(root) = run {
        let dir = RunDir::new(&root);
        let text = dir.history_text()?;
        let history = parse_history(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.path(run_dir::HISTORY).display())))?;
        let (Some(first), Some(last)) = (history.first(), history.last()) else {
            return Err(CliError::Runtime(format!("{} is empty", dir.path(run_dir::HISTORY).display())));
        };
        let monotone = history.windows(2).all(|w| w[1].best >= w[0].best);
        println!("run: {}", root.display());
        println!("generations: {}", last.generation);
        println!("initial_best: {}", first.best);
        println!("final_best: {}", last.best);
        println!("final_mean: {}", last.mean);
        println!("final_std: {}", last.std);
        println!("diverged_total: {}", history.iter().map(|h| h.diverged).sum::<usize>());
        println!("best_non_decreasing: {monotone}");
    }
    Ok(())
}
