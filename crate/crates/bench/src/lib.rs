//! Shared fixtures for the benchmarks.

use mcdbf_core::data::{generate_separable, SynthConfig};
use mcdbf_core::Example;

/// A separable stream of `n` unit vectors over `k` classes.
pub fn stream(k: usize, d: usize, n: u64) -> Vec<Example> {
    let config = SynthConfig {
        k,
        d,
        margin: 1.0,
        gap: 0.05,
        seed: 42,
        rounds: n,
        noise_rate: 0.0,
    };
    generate_separable(&config).expect("benchmark stream").examples
}
