use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use crowdwalk_core::controller::{Genome, DEFAULT_HIDDEN};
use crowdwalk_core::evolve::{
    self, evaluate, DEParams, EpisodeConfig, EpisodeObjective, Evaluator, GAParams, NoiseKind,
    OptimizerConfig, RatingSeed, RunConfig,
};
use crowdwalk_core::sim::SkeletonSpec;
use crowdwalk_core::NetworkTopology;
use crowdwalk_service::Client;

use crate::args::EvolveArgs;
use crate::config::{self, pick, FileConfig};
use crate::run_dir::{self, ManifestSeed, RunDir, RunManifest};
use crate::{CliError, Globals};

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveSummary {
    pub output_dir: PathBuf,
    pub best_fitness: f64,
    pub terminated_early: bool,
    pub generations: u64,
}

pub(crate) fn command(globals: &Globals, args: &EvolveArgs, file: &FileConfig) -> Result<(), CliError> {
    let manifest = match &args.from_manifest {
        Some(path) => {
            let mut m = run_dir::load_manifest(path)?;
            if let Some(out) = &globals.out {
                m.output_dir = out.clone();
            }
            m
        }
        None => {
            let mut m = plan_from_args(globals, args, file)?;
            if args.seed_from_gallery {
                let url = pick(args.url.clone(), file.service.url.clone()).unwrap_or(config::DEFAULT_URL.into());
                let k = pick(args.seed_count, file.evolve.seed_count).unwrap_or(config::DEFAULT_SEED_COUNT);
                m.rating_seeds = fetch_seeds(&url, &m.episode.skeleton.name, k)?;
            }
            m
        }
    };
    let workers = globals.workers.unwrap_or_else(config::default_workers);
    let summary = run_manifest(&manifest, workers)?;
    println!(
        "best fitness {} after {} generations{}; outputs in {}",
        summary.best_fitness,
        summary.generations,
        if summary.terminated_early { " (best episode terminated early)" } else { "" },
        summary.output_dir.display()
    );
    Ok(())
}

fn parse_optimizer(tag: &str) -> Result<&'static str, CliError> {
    match tag {
        "ga" => Ok("ga"),
        "de" => Ok("de"),
        other => Err(CliError::Usage(format!("unknown optimizer {other:?}; expected ga or de"))),
    }
}

/// Resolves flags, environment and config file into a validated manifest.
pub fn plan_from_args(globals: &Globals, args: &EvolveArgs, file: &FileConfig) -> Result<RunManifest, CliError> {
    let f = &file.evolve;
    let usage = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());

    let tag = parse_optimizer(pick(args.optimizer.as_deref(), f.optimizer.as_deref()).unwrap_or("ga"))?;
    let population = pick(args.pop, f.population);
    let optimizer = if tag == "ga" {
        let d = GAParams::default();
        OptimizerConfig::Ga(GAParams {
            population_size: population.unwrap_or(d.population_size),
            tournament_size: pick(args.tournament_size, f.tournament_size).unwrap_or(d.tournament_size),
            crossover_rate: pick(args.crossover_rate, f.crossover_rate).unwrap_or(d.crossover_rate),
            mutation_rate: pick(args.mutation_rate, f.mutation_rate).unwrap_or(d.mutation_rate),
            mutation_sigma: pick(args.mutation_sigma, f.mutation_sigma).unwrap_or(d.mutation_sigma),
            elite_count: pick(args.elite_count, f.elite_count).unwrap_or(d.elite_count),
        })
    } else {
        let d = DEParams::default();
        OptimizerConfig::De(DEParams {
            population_size: population.unwrap_or(d.population_size),
            differential_weight: pick(args.differential_weight, f.differential_weight)
                .unwrap_or(d.differential_weight),
            crossover_probability: pick(args.crossover_probability, f.crossover_probability)
                .unwrap_or(d.crossover_probability),
            strategy: d.strategy,
        })
    };

    let skeleton_file = pick(args.skeleton.clone(), f.skeleton.clone());
    let skeleton = match &skeleton_file {
        Some(path) => SkeletonSpec::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => SkeletonSpec::walker(),
    };
    let hidden = pick(args.hidden.clone(), f.hidden.clone()).unwrap_or_else(|| DEFAULT_HIDDEN.to_vec());
    NetworkTopology::for_skeleton(&skeleton, &hidden).map_err(|e| usage(&e))?;

    let mut episode = EpisodeConfig::new(skeleton);
    if let Some(steps) = pick(args.max_steps, f.max_steps) {
        episode.max_steps = steps;
    }
    episode.validate().map_err(|e| usage(&e))?;

    let noise = match pick(args.noise.as_deref(), f.noise.as_deref()) {
        Some(s) => s.parse::<NoiseKind>().map_err(|e| usage(&e))?,
        None => NoiseKind::default(),
    };
    let seed = globals.seed.unwrap_or(config::DEFAULT_SEED);
    let generations = pick(args.generations, f.generations).unwrap_or(config::DEFAULT_GENERATIONS);
    let mut run = RunConfig::new(optimizer, seed, generations);
    run.noise = noise;
    if let Some(s) = pick(args.init_scale, f.init_scale) {
        run.init_scale = s;
    }
    if let Some(b) = pick(args.rating_bonus, f.rating_bonus) {
        run.rating_bonus = b;
    }
    run.validate().map_err(|e| usage(&e))?;

    let output_dir = globals.out.clone().unwrap_or_else(|| PathBuf::from(format!("runs/{tag}-seed{seed}")));
    Ok(RunManifest {
        schema_version: run_dir::MANIFEST_VERSION,
        master_seed: seed,
        optimizer: tag.to_string(),
        generations,
        run,
        hidden_layers: hidden,
        episode,
        skeleton_file,
        output_dir,
        rating_seeds: Vec::new(),
    })
}

fn fetch_seeds(url: &str, skeleton: &str, k: usize) -> Result<Vec<ManifestSeed>, CliError> {
    let client = Client::new(url);
    let views = crate::runtime()?
        .block_on(client.top_rated(Some(skeleton), k))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    tracing::info!(count = views.len(), "fetched rating seeds from {url}");
    Ok(views
        .into_iter()
        .map(|v| ManifestSeed { source_id: v.id.to_string(), mean_rating: v.score.mean, genome: v.genome })
        .collect())
}

/// Executes a manifest: writes it, runs the optimizer, and writes history,
/// best genome and best trace. Output files are a pure function of the
/// manifest; `workers` only changes how fast they appear.
pub fn run_manifest(manifest: &RunManifest, workers: usize) -> Result<EvolveSummary, CliError> {
    manifest.validate()?;
    manifest.run.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if workers == 0 {
        return Err(CliError::Usage("workers must be >= 1".into()));
    }
    let topology = NetworkTopology::for_skeleton(&manifest.episode.skeleton, &manifest.hidden_layers)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let objective = EpisodeObjective::new(manifest.episode.clone(), topology)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let evaluator = Evaluator::new(workers).map_err(|e| CliError::Runtime(e.to_string()))?;
    let seeds: Vec<RatingSeed> = manifest
        .rating_seeds
        .iter()
        .map(|s| RatingSeed { genome: s.genome.clone(), mean_rating: s.mean_rating })
        .collect();

    let dir = RunDir::new(&manifest.output_dir);
    dir.create()?;
    dir.write(run_dir::MANIFEST, &run_dir::to_json_pretty(manifest))?;

    let open = |name: &str| {
        let path = dir.path(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
    };
    let mut history = open(run_dir::HISTORY)?;
    let mut walltime = open(run_dir::WALLTIME)?;
    let mut write_error: Option<std::io::Error> = None;

    let outcome = catch_unwind(AssertUnwindSafe(|| {
        evolve::run(&manifest.run, &objective, &evaluator, &seeds, |stats, elapsed| {
            tracing::info!(
                generation = stats.generation,
                best = stats.best,
                mean = stats.mean,
                "{:.2}s",
                elapsed.as_secs_f64()
            );
            let line = serde_json::json!({ "generation": stats.generation, "seconds": elapsed.as_secs_f64() });
            let result = writeln!(history, "{}", stats.to_log_line())
                .and_then(|()| history.flush())
                .and_then(|()| writeln!(walltime, "{line}"))
                .and_then(|()| walltime.flush());
            if let Err(e) = result {
                write_error.get_or_insert(e);
            }
        })
    }))
    .map_err(|p| CliError::Runtime(format!("simulation panicked: {}", crate::panic_message(&*p))))?
    .map_err(|e| CliError::Runtime(format!("run failed: {e}")))?;
    if let Some(e) = write_error {
        return Err(CliError::Runtime(format!("cannot write run logs in {}: {e}", dir.root().display())));
    }

    let best: Genome = outcome.best;
    let eval = catch_unwind(AssertUnwindSafe(|| evaluate(&best, &manifest.episode)))
        .map_err(|p| CliError::Runtime(format!("simulation panicked: {}", crate::panic_message(&*p))))?
        .map_err(|e| CliError::Runtime(format!("best genome replay failed: {e}")))?;
    let mut genome_json = serde_json::to_string(&best).expect("genomes serialize");
    genome_json.push('\n');
    dir.write(run_dir::BEST_GENOME, &genome_json)?;
    dir.write(run_dir::BEST_TRACE, &eval.trace.to_json())?;

    Ok(EvolveSummary {
        output_dir: manifest.output_dir.clone(),
        best_fitness: best.fitness.unwrap_or(f64::NEG_INFINITY),
        terminated_early: eval.trace.terminated_early,
        generations: manifest.generations,
    })
}
