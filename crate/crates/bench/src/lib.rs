//! Criterion benchmarks for the hot paths: `cargo bench -p crowdwalk-bench`.
//!
//! The library only holds fixtures shared by the bench targets.

use crowdwalk_core::controller::{GenomeId, DEFAULT_HIDDEN};
use crowdwalk_core::evolve::EpisodeConfig;
use crowdwalk_core::{Genome, NetworkTopology, SkeletonSpec};

/// The default walker episode and its network topology.
pub fn walker_setup() -> (EpisodeConfig, NetworkTopology) {
    let cfg = EpisodeConfig::new(SkeletonSpec::walker());
    let topology = NetworkTopology::for_skeleton(&cfg.skeleton, &DEFAULT_HIDDEN).expect("walker topology");
    (cfg, topology)
}

/// A genome with deterministic, well-spread weights in `[-1, 1)`.
pub fn fixed_genome(topology: &NetworkTopology) -> Genome {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let weights = (0..topology.genome_length())
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect();
    Genome::new(GenomeId(0), topology.clone(), weights).expect("genome matches topology")
}
