use std::collections::HashMap;
use std::fs;

use chrono::Utc;
use crowdwalk_core::controller::{Genome, GenomeId, DEFAULT_HIDDEN};
use crowdwalk_core::evolve::{evaluate, EpisodeConfig, GAParams, OptimizerConfig, RunConfig};
use crowdwalk_core::gallery::*;
use crowdwalk_core::sim::SkeletonSpec;
use crowdwalk_core::NetworkTopology;
use proptest::prelude::*;
use tempfile::TempDir;

fn record(id: &str, weight: f64) -> SolutionRecord {
    let episode = EpisodeConfig { max_steps: 30, ..EpisodeConfig::new(SkeletonSpec::walker()) };
    let topology = NetworkTopology::for_skeleton(&episode.skeleton, &DEFAULT_HIDDEN).unwrap();
    let weights = vec![weight; topology.genome_length()];
    let genome = Genome::new(GenomeId(7), topology, weights).unwrap();
    let eval = evaluate(&genome, &episode).unwrap();
    SolutionRecord {
        schema_version: SCHEMA_VERSION,
        id: SolutionId::new(id).unwrap(),
        created_at: Utc::now(),
        skeleton_name: "walker".into(),
        optimizer: RunConfig::new(OptimizerConfig::Ga(GAParams::default()), 1, 10),
        episode,
        mechanistic_fitness: eval.fitness,
        genome,
        trace: eval.trace,
        ratings: Vec::new(),
    }
}

fn store() -> (TempDir, GalleryStore) {
    let dir = TempDir::new().unwrap();
    let store = GalleryStore::open(dir.path(), DEFAULT_THRESHOLD).unwrap();
    (dir, store)
}

fn id(s: &str) -> SolutionId {
    SolutionId::new(s).unwrap()
}

fn rate(store: &GalleryStore, solution: &str, values: &[f64]) {
    for (i, &v) in values.iter().enumerate() {
        store.submit_rating(&id(solution), Rating::new(v, format!("rater-{i}"))).unwrap();
    }
}

#[test]
fn put_then_get_round_trips_byte_for_byte() {
    let (_dir, store) = store();
    let rec = record("alpha", 0.1);
    assert_eq!(store.put_solution(&rec).unwrap(), rec.id);
    let back = store.get(&rec.id).unwrap();
    assert_eq!(back.to_json(), rec.to_json());
    assert_eq!(store.trace_bytes(&rec.id).unwrap(), rec.trace.to_json().into_bytes());
    let (page, next) = store.list(None, 0, DEFAULT_PAGE_SIZE);
    assert_eq!((page.len(), next), (1, None));
    assert_eq!(page[0].class, ScoreClass::Unrated);
}

#[test]
fn duplicates_and_bad_records_are_rejected() {
    let (_dir, store) = store();
    let rec = record("alpha", 0.1);
    store.put_solution(&rec).unwrap();
    assert_eq!(store.put_solution(&rec), Err(GalleryError::Duplicate("alpha".into())));

    let mut short = record("beta", 0.1);
    for frame in &mut short.trace.frames {
        frame.pop();
    }
    match store.put_solution(&short) {
        Err(GalleryError::Validation { field, .. }) => assert_eq!(field, "trace"),
        other => panic!("expected a trace validation error, got {other:?}"),
    }

    let mut genome_mismatch = record("gamma", 0.1);
    genome_mismatch.genome.weights.pop();
    assert!(matches!(
        store.put_solution(&genome_mismatch),
        Err(GalleryError::Validation { field: "genome", .. })
    ));
    assert_eq!(store.len(), 1);
}

#[test]
fn ratings_follow_the_replacement_rule() {
    let (_dir, store) = store();
    store.put_solution(&record("alpha", 0.1)).unwrap();
    rate(&store, "alpha", &[1.0, 0.0, 1.0, 1.0]);
    let s = store.score(&id("alpha")).unwrap();
    assert_eq!((s.mean, s.count, s.class), (0.75, 4, ScoreClass::Good));

    let s = store.submit_rating(&id("alpha"), Rating::new(0.0, "rater-0")).unwrap();
    assert_eq!((s.mean, s.count, s.class), (0.5, 4, ScoreClass::Good));

    assert_eq!(
        store.submit_rating(&id("alpha"), Rating::new(1.5, "x")),
        Err(GalleryError::RatingOutOfRange(1.5))
    );
    assert_eq!(
        store.submit_rating(&id("nope"), Rating::new(1.0, "x")),
        Err(GalleryError::NotFound("nope".into()))
    );
    assert_eq!(store.score(&id("nope")), Err(GalleryError::NotFound("nope".into())));
}

#[test]
fn reopening_replays_the_log() {
    let dir = TempDir::new().unwrap();
    {
        let store = GalleryStore::open(dir.path(), DEFAULT_THRESHOLD).unwrap();
        store.put_solution(&record("alpha", 0.1)).unwrap();
        store.put_solution(&record("beta", -0.1)).unwrap();
        rate(&store, "alpha", &[1.0, 0.0, 0.0]);
        store.submit_rating(&id("alpha"), Rating::new(1.0, "rater-2")).unwrap();
    }
    let log = dir.path().join("solutions/alpha/ratings.log");
    // an append cut short by a crash is not part of the store
    fs::OpenOptions::new()
        .append(true)
        .open(&log)
        .and_then(|mut f| std::io::Write::write_all(&mut f, br#"{"value":1.0,"rater_to"#))
        .unwrap();

    let store = GalleryStore::open(dir.path(), DEFAULT_THRESHOLD).unwrap();
    assert_eq!(store.len(), 2);
    let history = store.rating_history(&id("alpha")).unwrap();
    assert_eq!(history.iter().map(|r| r.value).collect::<Vec<_>>(), [1.0, 0.0, 0.0, 1.0]);
    let s = store.score(&id("alpha")).unwrap();
    assert_eq!((s.count, s.mean), (3, 2.0 / 3.0));
    assert_eq!(store.view(&id("alpha")).unwrap().ratings.len(), 3);
    assert_eq!(store.score(&id("beta")).unwrap().class, ScoreClass::Unrated);
}

#[test]
fn corrupt_middle_line_is_an_error() {
    let dir = TempDir::new().unwrap();
    {
        let store = GalleryStore::open(dir.path(), DEFAULT_THRESHOLD).unwrap();
        store.put_solution(&record("alpha", 0.1)).unwrap();
        rate(&store, "alpha", &[1.0]);
    }
    let log = dir.path().join("solutions/alpha/ratings.log");
    let text = fs::read_to_string(&log).unwrap();
    fs::write(&log, format!("garbage\n{text}")).unwrap();
    assert!(matches!(
        GalleryStore::open(dir.path(), DEFAULT_THRESHOLD),
        Err(GalleryError::Corrupt { .. })
    ));
}

#[test]
fn unknown_schema_versions_are_rejected() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("index.json"), r#"{"schema_version":2,"ids":[]}"#).unwrap();
    assert!(matches!(
        GalleryStore::open(dir.path(), DEFAULT_THRESHOLD),
        Err(GalleryError::SchemaVersion { found: 2, .. })
    ));
    let (_dir, store) = store();
    let mut rec = record("alpha", 0.1);
    rec.schema_version = 9;
    assert!(matches!(store.put_solution(&rec), Err(GalleryError::SchemaVersion { found: 9, .. })));
}

#[test]
fn top_rated_tie_break_chain() {
    let (_dir, store) = store();
    assert!(store.top_rated(None, 5).is_empty());
    for (name, w) in [("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4), ("e", 0.5), ("f", 0.6)] {
        store.put_solution(&record(name, w)).unwrap();
    }
    rate(&store, "a", &[1.0, 1.0, 1.0, 1.0, 0.0]); // 0.8 over 5
    rate(&store, "b", &[0.9]); // 0.9 over 1
    rate(&store, "c", &[[1.0; 12].as_slice(), &[0.0; 3]].concat()); // 0.8 over 15
    rate(&store, "d", &[0.3, 0.3]); // poor
    rate(&store, "e", &[1.0, 1.0, 1.0, 1.0, 0.0]); // ties with a on mean and count

    assert_eq!(store.score(&id("a")).unwrap().mean, store.score(&id("c")).unwrap().mean);
    let a_fit = store.view(&id("a")).unwrap().mechanistic_fitness;
    let e_fit = store.view(&id("e")).unwrap().mechanistic_fitness;
    let (first, second) = if e_fit > a_fit { ("e", "a") } else { ("a", "e") };

    let top: Vec<String> = store.top_rated(Some("walker"), 10).iter().map(|v| v.id.to_string()).collect();
    assert_eq!(top, ["b", "c", first, second]);
    assert_eq!(store.top_rated(None, 2).len(), 2);
    assert!(store.top_rated(Some("biped"), 10).is_empty());
}

#[test]
fn equal_everything_falls_back_to_id() {
    let (_dir, store) = store();
    store.put_solution(&record("zeta", 0.1)).unwrap();
    store.put_solution(&record("eta", 0.1)).unwrap();
    rate(&store, "zeta", &[1.0]);
    rate(&store, "eta", &[1.0]);
    let top: Vec<String> = store.top_rated(None, 5).iter().map(|v| v.id.to_string()).collect();
    assert_eq!(top, ["eta", "zeta"]);
}

#[test]
fn listing_pages_and_filters() {
    let (_dir, store) = store();
    for i in 0..7 {
        store.put_solution(&record(&format!("s{i}"), 0.01 * i as f64)).unwrap();
    }
    let (page, next) = store.list(None, 0, 3);
    assert_eq!(page.iter().map(|s| s.id.to_string()).collect::<Vec<_>>(), ["s0", "s1", "s2"]);
    assert_eq!(next, Some(3));
    let (page, next) = store.list(None, 6, 3);
    assert_eq!((page.len(), next), (1, None));
    let (page, next) = store.list(Some("other"), 0, 3);
    assert_eq!((page.len(), next), (0, None));
}

#[test]
fn concurrent_raters_on_one_solution() {
    let (_dir, store) = store();
    store.put_solution(&record("alpha", 0.1)).unwrap();
    let values: Vec<f64> = (0..16).map(|i| (i % 3) as f64 / 2.0).collect();
    std::thread::scope(|scope| {
        for (i, &v) in values.iter().enumerate() {
            let store = &store;
            scope.spawn(move || store.submit_rating(&id("alpha"), Rating::new(v, format!("t{i}"))).unwrap());
        }
    });
    let s = store.score(&id("alpha")).unwrap();
    assert_eq!(s.count, 16);
    let mean = values.iter().sum::<f64>() / 16.0;
    assert!((s.mean - mean).abs() < 1e-15);
    assert_eq!(store.rating_history(&id("alpha")).unwrap().len(), 16);
}

fn ratings_from(values: &[f64]) -> Vec<Rating> {
    values.iter().enumerate().map(|(i, &v)| Rating::new(v, format!("t{i}"))).collect()
}

proptest! {
    #[test]
    fn mean_is_the_exact_arithmetic_mean(values in prop::collection::vec(0.0..=1.0f64, 1..64)) {
        let score = aggregate(&ratings_from(&values), DEFAULT_THRESHOLD);
        let naive = values.iter().fold(0.0, |acc, v| acc + v) / values.len() as f64;
        prop_assert_eq!(score.mean, naive);
        prop_assert_eq!(score.count, values.len());
        prop_assert!((0.0..=1.0).contains(&score.mean));
    }

    #[test]
    fn threshold_is_inclusive(threshold in 0.0..=1.0f64, below in 1u32..1000) {
        prop_assert_eq!(classify(threshold, 3, threshold), ScoreClass::Good);
        let smaller = threshold - below as f64 * f64::EPSILON;
        if smaller < threshold {
            prop_assert_eq!(classify(smaller, 3, threshold), ScoreClass::Poor);
        }
        let just_below = f64::from_bits(threshold.to_bits() - 1);
        if threshold > 0.0 {
            prop_assert_eq!(classify(just_below, 1, threshold), ScoreClass::Poor);
        }
    }

    #[test]
    fn half_and_half_is_good(pairs in 1usize..50) {
        let values: Vec<f64> = (0..2 * pairs).map(|i| (i % 2) as f64).collect();
        let score = aggregate(&ratings_from(&values), 0.5);
        prop_assert_eq!(score.mean, 0.5);
        prop_assert_eq!(score.class, ScoreClass::Good);
    }

    #[test]
    fn no_ratings_is_never_classified(threshold in 0.0..=1.0f64) {
        let score = aggregate(&[], threshold);
        prop_assert_eq!(score.class, ScoreClass::Unrated);
        prop_assert_eq!(score.count, 0);
    }

    #[test]
    fn resubmission_keeps_only_the_last_vote(
        votes in prop::collection::vec((0usize..6, 0.0..=1.0f64), 1..40)
    ) {
        let mut ratings = Vec::new();
        let mut last: HashMap<usize, f64> = HashMap::new();
        for &(token, value) in &votes {
            apply_rating(&mut ratings, Rating::new(value, format!("token-{token}")));
            last.insert(token, value);
        }
        prop_assert_eq!(ratings.len(), last.len());
        for r in &ratings {
            let token: usize = r.rater_token["token-".len()..].parse().unwrap();
            prop_assert_eq!(r.value, last[&token]);
        }
    }
}
