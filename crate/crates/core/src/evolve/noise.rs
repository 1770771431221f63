//! Uniform noise sources that plug into every random slot of the optimizers.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A reproducible stream of uniform variates in `[0, 1)`.
pub trait NoiseSource {
    fn next_uniform(&mut self) -> f64;

    /// Uniform index in `0..n`. `n` must be positive.
    fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_uniform() * n as f64) as usize).min(n - 1)
    }

    /// Standard normal variate (Box-Muller, one value per two uniforms).
    fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

impl<N: NoiseSource + ?Sized> NoiseSource for &mut N {
    fn next_uniform(&mut self) -> f64 {
        (**self).next_uniform()
    }
}

/// SplitMix64 finalizer, used to spread seeds and derive sub-streams.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for `(master, path...)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    StandardPrng,
    ChaoticLogistic,
}

impl NoiseKind {
    pub fn source(self, seed: u64) -> Noise {
        match self {
            NoiseKind::StandardPrng => Noise::Standard(StandardNoise::new(seed)),
            NoiseKind::ChaoticLogistic => Noise::Chaotic(ChaoticLogistic::new(seed)),
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard-prng" | "standard" => Ok(NoiseKind::StandardPrng),
            "chaotic-logistic" | "chaotic" => Ok(NoiseKind::ChaoticLogistic),
            other => Err(format!("unknown noise kind {other:?}")),
        }
    }
}

/// ChaCha8 stream; platform independent for a given seed.
#[derive(Clone, Debug)]
pub struct StandardNoise {
    rng: ChaCha8Rng,
}

impl StandardNoise {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl NoiseSource for StandardNoise {
    fn next_uniform(&mut self) -> f64 {
        unit_from_bits(self.rng.next_u64())
    }
}

/// One iteration of the fully chaotic logistic map.
pub fn logistic_map(x: f64) -> f64 {
    4.0 * x * (1.0 - x)
}

/// Inverse CDF of the arcsine law, mapping logistic-map states onto `[0, 1)` uniformly.
pub fn arcsine_whiten(x: f64) -> f64 {
    (2.0 / PI) * x.sqrt().asin()
}

/// States this close to 0 or 1 fall onto the absorbing orbit 1 -> 0.
const ESCAPE_MARGIN: f64 = 1e-12;
const FIXED_POINTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Logistic map `x <- 4x(1-x)` whitened by the arcsine transform.
///
/// Finite-precision orbits can land on the absorbing point 0 or on the fixed
/// point 3/4; when that happens the state is re-drawn from a SplitMix64
/// counter, so the stream never stalls and stays reproducible.
#[derive(Clone, Debug)]
pub struct ChaoticLogistic {
    state: f64,
    escape_counter: u64,
}

impl ChaoticLogistic {
    pub fn new(seed: u64) -> Self {
        let mut source = Self { state: 0.5, escape_counter: splitmix64(seed) };
        source.escape();
        source
    }

    /// Starts from an explicit state; `None` if it is not in `(0, 1)` or is a fixed point.
    pub fn from_state(state: f64) -> Option<Self> {
        if !(state > 0.0 && state < 1.0) || FIXED_POINTS.contains(&state) {
            return None;
        }
        Some(Self { state, escape_counter: splitmix64(state.to_bits()) })
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    fn is_degenerate(x: f64) -> bool {
        !(x > ESCAPE_MARGIN && x < 1.0 - ESCAPE_MARGIN) || FIXED_POINTS.contains(&x)
    }

    fn escape(&mut self) {
        loop {
            self.escape_counter = splitmix64(self.escape_counter);
            let x = unit_from_bits(self.escape_counter);
            if !Self::is_degenerate(x) {
                self.state = x;
                return;
            }
        }
    }

    /// Advances the raw map once and returns the whitened value.
    pub fn chaotic_next(&mut self) -> f64 {
        loop {
            self.state = logistic_map(self.state);
            if Self::is_degenerate(self.state) {
                self.escape();
            }
            let u = arcsine_whiten(self.state);
            if u < 1.0 && !FIXED_POINTS.contains(&u) {
                return u;
            }
        }
    }
}

impl NoiseSource for ChaoticLogistic {
    fn next_uniform(&mut self) -> f64 {
        self.chaotic_next()
    }
}

#[derive(Clone, Debug)]
pub enum Noise {
    Standard(StandardNoise),
    Chaotic(ChaoticLogistic),
}

impl NoiseSource for Noise {
    fn next_uniform(&mut self) -> f64 {
        match self {
            Noise::Standard(n) => n.next_uniform(),
            Noise::Chaotic(n) => n.next_uniform(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_step_by_hand() {
        // 4 * 0.3 * 0.7 = 0.84
        assert!((logistic_map(0.3) - 0.84).abs() < 1e-15);
        let mut c = ChaoticLogistic::from_state(0.3).unwrap();
        let u = c.chaotic_next();
        assert!((c.state() - 0.84).abs() < 1e-15);
        assert!((u - arcsine_whiten(0.84)).abs() < 1e-15);
    }

    #[test]
    fn fixed_points_are_refused() {
        for x in [0.0, 0.25, 0.5, 0.75, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(ChaoticLogistic::from_state(x).is_none(), "{x}");
        }
    }

    #[test]
    fn whitening_maps_arcsine_quantiles_to_uniform() {
        // P(X <= sin^2(pi u / 2)) = u for the arcsine law
        for u in [0.1, 0.3, 0.5, 0.9] {
            let x = (PI * u / 2.0).sin().powi(2);
            assert!((arcsine_whiten(x) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        for kind in [NoiseKind::StandardPrng, NoiseKind::ChaoticLogistic] {
            let a: Vec<f64> = (0..100).scan(kind.source(7), |n, _| Some(n.next_uniform())).collect();
            let b: Vec<f64> = (0..100).scan(kind.source(7), |n, _| Some(n.next_uniform())).collect();
            let c: Vec<f64> = (0..100).scan(kind.source(8), |n, _| Some(n.next_uniform())).collect();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn chaotic_mean_is_near_half() {
        let mut c = ChaoticLogistic::new(2024);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = c.chaotic_next();
            assert!((0.0..1.0).contains(&u));
            assert!(!FIXED_POINTS.contains(&u));
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn absorbing_orbit_escapes() {
        // 0.5 -> 1 -> 0 is absorbing for the raw map; one ulp away rounds onto it
        let mut c = ChaoticLogistic::from_state(0.5 + f64::EPSILON).unwrap();
        for _ in 0..1000 {
            let u = c.chaotic_next();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn index_stays_in_range() {
        let mut n = StandardNoise::new(3);
        for _ in 0..10_000 {
            assert!(n.index(7) < 7);
        }
    }
}
