//! Fixtures shared by the criterion benchmarks.

use mdiica::study::{make_trial, trial_rng, SourceSpec, Trial};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Whitened mixture of `m` copies of a preset law.
pub fn problem(id: &str, m: usize, n: usize, seed: u64) -> Trial {
    let specs = vec![SourceSpec::preset(id).expect("known preset"); m];
    make_trial(&specs, n, &mut trial_rng(seed, 0, 0)).expect("valid trial")
}

/// Standardized draws from a preset law.
pub fn samples(id: &str, n: usize, seed: u64) -> Vec<f64> {
    let spec = SourceSpec::preset(id).expect("known preset");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| spec.sample(&mut rng)).collect()
}
