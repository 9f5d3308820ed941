//! Seeded, worker-count independent Monte Carlo plumbing.
//!
//! Every trial gets its own ChaCha8 stream keyed by `(seed, trial index)`,
//! so splitting trials across threads cannot change what any trial draws,
//! and the reduction is an integer sum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trials handed to one rayon task.
const CHUNK: u64 = 4096;

pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent seed for sub-experiment `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// A Bernoulli proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn from_counts(hits: u64, trials: u64, seed: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate { estimate: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials, seed }
    }

    /// Standard error a sample of this size would have if the true value were `p`.
    pub fn expected_stderr(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Whether `p` lies within `k` standard errors (evaluated at `p`) of the estimate.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        (self.estimate - p).abs() <= k * self.expected_stderr(p)
    }
}

/// Runs `trial` for indices `0..trials` in parallel and counts `true` results.
pub fn count_hits<F>(trials: u64, seed: u64, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(trials);
            (start..end)
                .filter(|&i| {
                    let mut rng = trial_rng(seed, i);
                    trial(&mut rng)
                })
                .count() as u64
        })
        .sum()
}
