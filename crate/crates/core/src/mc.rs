//! Seeded, shardable Monte Carlo.
//!
//! Draws are grouped into shards of [`SHARD_SIZE`]. Shard `i` owns the ChaCha8
//! stream `i` under the run seed, so a shard produces the same draws whichever
//! worker runs it. Results are concatenated in shard order and reduced
//! sequentially, which makes every estimate bit-identical across thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result, ValidationErrors};

/// Draws per shard.
pub const SHARD_SIZE: usize = 4096;

/// Default number of draws.
pub const DEFAULT_DRAWS: usize = 200_000;

/// Mean of a Monte Carlo sample with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator) over `sqrt(n)`.
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(validation("mc.n", "at least one draw is required"));
        }
        let first = samples[0];
        if samples.iter().all(|&x| x == first) {
            return Ok(Self { mean: first, std_error: 0.0, n, seed });
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, std_error, n, seed })
    }
}

pub(crate) fn validation(field: &str, message: &str) -> Error {
    let mut e = ValidationErrors::default();
    e.push(field, message);
    Error::Validation(e)
}

/// SplitMix64 step, used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for shard `shard` of a run seeded with `seed`.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Runs `draw` `n` times and returns the results in draw order.
///
/// Runs on the current rayon pool; see [`with_threads`].
pub fn run<T, F>(n: usize, seed: u64, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    if n == 0 {
        return Err(validation("mc.n", "at least one draw is required"));
    }
    let shards = n.div_ceil(SHARD_SIZE);
    let parts: Vec<Result<Vec<T>>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s as u64);
            let len = SHARD_SIZE.min(n - s * SHARD_SIZE);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
